"""Food Material Library"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

PathLike = Union[str, Path]

LIBRARY_FORMAT = "slicekit.materials"
UNIT_FIELDS = ("hardness", "skin_toughness", "friction", "slip_propensity", "skin_slope")
FRESHNESS_TAGS = ("", "fresh", "old")


@dataclass(frozen=True)
class MaterialSpec:
    """
    Mechanical and acoustic description of one food item.

    Unitless properties lie in [0, 1]. A material with hardness 1 cannot be
    cut and carries (0, 0) slicing parameters.

    Attributes:
        name: Material label used by the classifiers
        hardness: Cutting resistance and impact stiffness
        skin_toughness: Sawing needed to break through the skin
        friction: Blade friction on the surface
        slip_propensity: Chance the blade skids off the skin
        skin_slope: How sloped the skin is under the blade
        height: Item height above the board (m)
        width: Item extent along X (m)
        true_params: Ground-truth slicing (amplitude, height) in meters
        freshness: "", "fresh" or "old"
        resonance_hz: Dominant frequency of contact sounds
        crunch_rate_hz: Crunch modulation while slicing; 0 for none
    """

    name: str
    hardness: float
    skin_toughness: float
    friction: float
    slip_propensity: float
    height: float
    true_params: tuple[float, float]
    freshness: str = ""
    skin_slope: float = 0.0
    width: float = 0.08
    resonance_hz: float = 1000.0
    crunch_rate_hz: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise ValueError("material name must not be empty")
        for name in UNIT_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{self.name}: {name} must lie in [0, 1], got {value}")
        if self.height <= 0 or self.width <= 0:
            raise ValueError(f"{self.name}: height and width must be positive")
        params = tuple(float(p) for p in self.true_params)
        if len(params) != 2 or min(params) < 0:
            raise ValueError(f"{self.name}: true_params must be two non-negative values")
        if self.freshness not in FRESHNESS_TAGS:
            raise ValueError(f"{self.name}: unknown freshness tag {self.freshness!r}")
        if self.resonance_hz <= 0 or self.crunch_rate_hz < 0:
            raise ValueError(f"{self.name}: resonance must be positive and crunch rate non-negative")
        object.__setattr__(self, "true_params", params)

    @property
    def cuttable(self) -> bool:
        return self.hardness < 1.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["true_params"] = list(self.true_params)
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "MaterialSpec":
        data = dict(data)
        data["true_params"] = tuple(data["true_params"])
        return cls(**data)


def _m(name, hardness, skin, friction, slip, slope, height, params, resonance, crunch=0.0, freshness=""):
    return MaterialSpec(
        name=name,
        hardness=hardness,
        skin_toughness=skin,
        friction=friction,
        slip_propensity=slip,
        skin_slope=slope,
        height=height,
        true_params=params,
        freshness=freshness,
        resonance_hz=resonance,
        crunch_rate_hz=crunch,
    )


DEFAULT_MATERIALS: tuple[MaterialSpec, ...] = (
    _m("tofu", 0.05, 0.02, 0.20, 0.00, 0.0, 0.035, (0.002, 0.030), 320),
    _m("banana", 0.10, 0.20, 0.20, 0.02, 0.2, 0.030, (0.004, 0.028), 420),
    _m("tomato", 0.15, 0.55, 0.25, 0.30, 0.6, 0.050, (0.020, 0.025), 500),
    _m("cheese", 0.25, 0.05, 0.50, 0.00, 0.0, 0.030, (0.005, 0.022), 650),
    _m("bread", 0.20, 0.35, 0.45, 0.05, 0.3, 0.060, (0.025, 0.020), 760, crunch=30),
    _m("potato", 0.65, 0.25, 0.35, 0.02, 0.1, 0.050, (0.014, 0.013), 900, crunch=8),
    _m("watermelon", 0.50, 0.90, 0.30, 0.60, 0.8, 0.080, (0.030, 0.015), 1000, crunch=8),
    _m("cucumber_old", 0.30, 0.25, 0.40, 0.05, 0.2, 0.035, (0.008, 0.028), 1100, 6, "old"),
    _m("onion", 0.45, 0.40, 0.25, 0.15, 0.5, 0.050, (0.012, 0.018), 1250, crunch=20),
    _m("cucumber_fresh", 0.40, 0.30, 0.35, 0.05, 0.2, 0.035, (0.010, 0.020), 1400, 12, "fresh"),
    _m("zucchini", 0.45, 0.25, 0.35, 0.03, 0.2, 0.040, (0.010, 0.020), 1550, crunch=14),
    _m("apple", 0.60, 0.35, 0.30, 0.10, 0.4, 0.060, (0.015, 0.015), 1700, crunch=15),
    _m("carrot_old", 0.55, 0.30, 0.35, 0.02, 0.1, 0.030, (0.012, 0.016), 1800, 10, "old"),
    _m("celery_old", 0.35, 0.40, 0.40, 0.03, 0.1, 0.020, (0.010, 0.018), 2000, 12, "old"),
    _m("carrot_fresh", 0.70, 0.30, 0.30, 0.02, 0.1, 0.030, (0.015, 0.012), 2200, 18, "fresh"),
    _m("celery_fresh", 0.50, 0.45, 0.30, 0.03, 0.1, 0.020, (0.012, 0.015), 2600, 25, "fresh"),
    _m("corn", 1.00, 1.00, 0.30, 0.00, 0.0, 0.045, (0.0, 0.0), 2900),
    _m("spaghetti_squash", 1.00, 1.00, 0.35, 0.00, 0.0, 0.080, (0.0, 0.0), 3400),
)

# the cut-efficiency comparison runs over these
SOFT_MATERIALS = ("tofu", "banana", "cheese", "cucumber_old", "cucumber_fresh", "zucchini")


def material_map(materials: Iterable[MaterialSpec]) -> dict[str, MaterialSpec]:
    """Index materials by name, rejecting duplicates."""
    index: dict[str, MaterialSpec] = {}
    for material in materials:
        if material.name in index:
            raise ValueError(f"duplicate material {material.name!r}")
        index[material.name] = material
    return index


def get_material(name: str, materials: Sequence[MaterialSpec] = DEFAULT_MATERIALS) -> MaterialSpec:
    """Look up a material by name."""
    index = material_map(materials)
    if name not in index:
        raise KeyError(f"unknown material {name!r}; choose from {sorted(index)}")
    return index[name]


def param_table(materials: Iterable[MaterialSpec] = DEFAULT_MATERIALS) -> dict[str, tuple[float, float]]:
    """Material name -> ground-truth slicing parameters."""
    return {m.name: m.true_params for m in materials}


def save_materials(path: PathLike, materials: Sequence[MaterialSpec]) -> Path:
    """Write a JSON material library."""
    material_map(materials)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {"format": LIBRARY_FORMAT, "materials": [m.to_dict() for m in materials]}
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    return path


def load_materials(path: PathLike) -> list[MaterialSpec]:
    """
    Read a material library.

    Accepts either the versioned object written by ``save_materials`` or a
    bare JSON list of material records.
    """
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        if data.get("format") != LIBRARY_FORMAT:
            raise ValueError(f"not a material library (format={data.get('format')!r})")
        data = data["materials"]
    materials = [MaterialSpec.from_dict(entry) for entry in data]
    if not materials:
        raise ValueError(f"{path}: material library is empty")
    material_map(materials)
    return materials
