"""Contact Events and Skill Vocabulary"""

IN_AIR = "in air"
HITTING_BOARD = "hitting cutting board"
HITTING_OBJECT = "hitting object"
SCRAPING_OBJECT = "scraping object"
SLICING_OBJECT = "slicing object"
SCRAPING_BOARD = "scraping cutting board"

EVENTS = (IN_AIR, HITTING_BOARD, HITTING_OBJECT, SCRAPING_OBJECT, SLICING_OBJECT, SCRAPING_BOARD)
HITTING_EVENTS = (IN_AIR, HITTING_BOARD, HITTING_OBJECT)
SLICING_EVENTS = (SLICING_OBJECT, SCRAPING_OBJECT, HITTING_BOARD)

# Cutting skills
MOVE_DOWN_ON_BOARD = "move_down_on_board"
MOVE_LEFT_TO_HIT_OBJECT = "move_left_to_hit_object"
MOVE_UP_AND_OVER = "move_up_and_over"
MOVE_DOWN_ONTO_OBJECT = "move_down_onto_object"
SLICING_ACTION = "slicing_action"
DONE = "done"

# Data-collection actions
SCRAPE_BOARD = "scrape_board"
SCRAPE_OBJECT = "scrape_object"
IN_AIR_DMP = "in_air_dmp"

SKILLS = (
    MOVE_DOWN_ON_BOARD,
    MOVE_LEFT_TO_HIT_OBJECT,
    MOVE_UP_AND_OVER,
    MOVE_DOWN_ONTO_OBJECT,
    SLICING_ACTION,
    DONE,
)

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}

# skill -> (label before contact, label after contact, motion axis)
APPROACH_SKILLS = {
    MOVE_DOWN_ON_BOARD: (IN_AIR, HITTING_BOARD, "z"),
    MOVE_LEFT_TO_HIT_OBJECT: (IN_AIR, HITTING_OBJECT, "x"),
    MOVE_DOWN_ONTO_OBJECT: (IN_AIR, HITTING_OBJECT, "z"),
}

# skills that stay in one contact state throughout
CONSTANT_SKILLS = {
    MOVE_UP_AND_OVER: IN_AIR,
    SLICING_ACTION: SLICING_OBJECT,
    SCRAPE_BOARD: SCRAPING_BOARD,
    SCRAPE_OBJECT: SCRAPING_OBJECT,
    IN_AIR_DMP: IN_AIR,
}
