import json
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from .constants import CODATA2018, DEFAULT_SPECIES, species_mass
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class SignConvention(str, Enum):
    MAGNETIC_NEGATIVE = "paper_negative"
    ZEEMAN_POSITIVE = "zeeman_positive"

    @property
    def sign(self) -> float:
        return -1.0 if self is SignConvention.MAGNETIC_NEGATIVE else 1.0


@dataclass(frozen=True)
class Configuration:
    """
    Validated run configuration. Frequencies are angular (rad/s), fields in SI.

    Per-ion vectors (``alpha_n``, occupations) always have length ``n_ions``.
    """
    n_ions: int
    species_mass: float
    omega_z: float
    omega_radial: Optional[Tuple[float, float]] = None
    b0: float = 0.0
    db_dz: float = 0.0
    d2b_dz2: float = 0.0
    db_dx: float = 0.0
    db_dy: float = 0.0
    g_factor_combination: float = 1.0
    alpha_n: Tuple[float, ...] = ()
    phonon_occupations: Tuple[int, ...] = ()
    transversal_occupations: Tuple[int, ...] = ()
    sign_convention: SignConvention = SignConvention.MAGNETIC_NEGATIVE
    species: Optional[str] = DEFAULT_SPECIES
    n_range: Tuple[int, int] = (2, 40)
    oracle_cutoff: int = 8
    oracle_order: int = 3

    @property
    def sign(self) -> float:
        return self.sign_convention.sign

    @property
    def length_scale(self) -> float:
        """Characteristic length l with l^3 = e^2 / (4 pi eps0 m omega_z^2)."""
        return (CODATA2018.coulomb_constant / (self.species_mass * self.omega_z ** 2)) ** (1.0 / 3.0)

    @property
    def delta_z_com(self) -> float:
        """Ground-state width of the centre-of-mass mode, sqrt(hbar / 2 m omega_z)."""
        return math.sqrt(CODATA2018.hbar / (2.0 * self.species_mass * self.omega_z))

    @property
    def has_transversal_gradient(self) -> bool:
        return self.db_dx != 0.0 or self.db_dy != 0.0

    def to_raw(self) -> Dict[str, Any]:
        """Serialise to the flat key set accepted by :func:`validate_config`."""
        raw = asdict(self)
        raw["dB_dz"] = raw.pop("db_dz")
        raw["d2B_dz2"] = raw.pop("d2b_dz2")
        raw["dB_dx"] = raw.pop("db_dx")
        raw["dB_dy"] = raw.pop("db_dy")
        raw["sign_convention"] = self.sign_convention.value
        raw["alpha_n"] = list(self.alpha_n)
        raw["phonon_occupations"] = list(self.phonon_occupations)
        raw["transversal_occupations"] = list(self.transversal_occupations)
        raw["n_range"] = list(self.n_range)
        if self.omega_radial is None:
            raw.pop("omega_radial")
        else:
            raw["omega_radial"] = list(self.omega_radial)
        if self.species is None:
            raw.pop("species")
        else:
            # species and species_mass together would be ambiguous
            raw.pop("species_mass")
        return raw

    def with_overrides(self, **changes: Any) -> "Configuration":
        """
        Return a re-validated copy with some fields replaced.

        Changing ``n_ions`` re-broadcasts uniform per-ion vectors to the new length;
        non-uniform vectors must be supplied explicitly alongside.
        """
        raw = self.to_raw()
        if "n_ions" in changes and changes["n_ions"] != self.n_ions:
            for key in ("alpha_n", "phonon_occupations", "transversal_occupations"):
                if key in changes:
                    continue
                values = raw[key]
                if len(set(values)) > 1:
                    raise ConfigurationError(key, f"{key} is not uniform; pass it explicitly when changing n_ions")
                raw[key] = values[0] if values else 0
        for key, value in changes.items():
            raw[_FIELD_TO_KEY.get(key, key)] = value
        return validate_config(raw)


_FIELD_TO_KEY = {"db_dz": "dB_dz", "d2b_dz2": "d2B_dz2", "db_dx": "dB_dx", "db_dy": "dB_dy"}

_FREQUENCY_KEYS = {"omega_z", "omega_z_hz", "omega_radial", "omega_radial_hz"}

_PLAIN_KEYS = {
    "n_ions", "species", "species_mass", "species_mass_amu", "b0", "dB_dz", "d2B_dz2",
    "dB_dx", "dB_dy", "g_factor_combination", "alpha_n", "phonon_occupations",
    "transversal_occupations", "sign_convention", "n_range", "oracle_cutoff", "oracle_order",
}

KNOWN_KEYS = frozenset(_PLAIN_KEYS) | frozenset(_FREQUENCY_KEYS)


def _number(raw: Mapping[str, Any], key: str, default: float = 0.0) -> float:
    value = raw.get(key, default)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(key, f"{key} must be a number, got {value!r}")
    if not math.isfinite(number):
        raise ConfigurationError(key, f"{key} must be finite")
    return number


def _integer(raw: Mapping[str, Any], key: str, default: int) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigurationError(key, f"{key} must be an integer, got {value!r}")
    return int(value)


def _per_ion(raw: Mapping[str, Any], key: str, n_ions: int, default: float, integer: bool) -> Tuple:
    value = raw.get(key, default)
    if isinstance(value, (list, tuple)):
        values = list(value)
        if len(values) != n_ions:
            raise ConfigurationError(key, f"{key} must have {n_ions} entries, got {len(values)}")
    else:
        values = [value] * n_ions
    converted = []
    for item in values:
        if integer:
            if isinstance(item, bool) or not isinstance(item, (int, float)) or int(item) != item:
                raise ConfigurationError(key, f"{key} entries must be integers, got {item!r}")
            if item < 0:
                raise ConfigurationError(key, f"{key} entries must be non-negative, got {item!r}")
            converted.append(int(item))
        else:
            try:
                number = float(item)
            except (TypeError, ValueError):
                raise ConfigurationError(key, f"{key} entries must be numbers, got {item!r}")
            if not math.isfinite(number):
                raise ConfigurationError(key, f"{key} entries must be finite")
            converted.append(number)
    return tuple(converted)


def _frequency(raw: Mapping[str, Any], name: str) -> Optional[Union[float, Sequence[float]]]:
    angular_key, hz_key = name, f"{name}_hz"
    if angular_key in raw and hz_key in raw:
        raise ConfigurationError(name, f"give either {angular_key} or {hz_key}, not both")
    if angular_key in raw:
        return raw[angular_key]
    if hz_key in raw:
        value = raw[hz_key]
        try:
            if isinstance(value, (list, tuple)):
                return [TWO_PI * float(v) for v in value]
            return TWO_PI * float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(name, f"{hz_key} must be a number, got {value!r}")
    return None


def parse_n_range(value: Any) -> Tuple[int, int]:
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 2:
            raise ConfigurationError("n_range", f"n_range must look like 'a:b', got {value!r}")
        try:
            low, high = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigurationError("n_range", f"n_range bounds must be integers, got {value!r}")
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigurationError("n_range", f"n_range bounds must be integers, got {value!r}")
        low, high = value
    else:
        raise ConfigurationError("n_range", f"n_range must be 'a:b' or [a, b], got {value!r}")
    if low < 2 or high > 60 or low > high:
        raise ConfigurationError("n_range", f"n_range must lie within [2, 60] with a <= b, got {low}:{high}")
    return low, high


def validate_config(raw: Mapping[str, Any]) -> Configuration:
    """
    Build a :class:`Configuration` from a flat key-value mapping.

    Frequencies given with a ``_hz`` suffix are ordinary frequencies and are
    multiplied by 2 pi; all other frequencies are taken as angular.

    Raises:
        ConfigurationError: naming the offending key or field.
    """
    if not isinstance(raw, Mapping):
        raise ConfigurationError("<root>", "configuration must be a key-value mapping")
    for key in raw:
        if key not in KNOWN_KEYS:
            raise ConfigurationError(key, f"unknown configuration key '{key}'")

    n_ions = _integer(raw, "n_ions", 0) if "n_ions" in raw else None
    if n_ions is None:
        raise ConfigurationError("n_ions", "n_ions is required")
    if n_ions < 1:
        raise ConfigurationError("n_ions", "n_ions must be ≥ 1")

    species: Optional[str] = raw.get("species")
    if species is not None and not isinstance(species, str):
        raise ConfigurationError("species", f"species must be a label such as '171Yb+', got {species!r}")
    mass_keys = [k for k in ("species_mass", "species_mass_amu") if k in raw]
    if len(mass_keys) > 1 or (mass_keys and species is not None):
        raise ConfigurationError("species_mass", "give only one of species, species_mass, species_mass_amu")
    if "species_mass" in raw:
        mass = _number(raw, "species_mass")
    elif "species_mass_amu" in raw:
        mass = _number(raw, "species_mass_amu") * CODATA2018.amu - CODATA2018.m_e
    else:
        species = species or DEFAULT_SPECIES
        mass = species_mass(species)
    if mass <= 0:
        raise ConfigurationError("species_mass", "species_mass must be positive")

    omega_z = _frequency(raw, "omega_z")
    if omega_z is None:
        raise ConfigurationError("omega_z", "omega_z (or omega_z_hz) is required")
    try:
        omega_z = float(omega_z)
    except (TypeError, ValueError):
        raise ConfigurationError("omega_z", f"omega_z must be a number, got {omega_z!r}")
    if not omega_z > 0 or not math.isfinite(omega_z):
        raise ConfigurationError("omega_z", "omega_z must be a positive frequency")

    radial = _frequency(raw, "omega_radial")
    omega_radial: Optional[Tuple[float, float]] = None
    if radial is not None:
        values = list(radial) if isinstance(radial, (list, tuple)) else [radial, radial]
        if len(values) != 2:
            raise ConfigurationError("omega_radial", "omega_radial takes one value or one per transversal direction")
        try:
            omega_radial = (float(values[0]), float(values[1]))
        except (TypeError, ValueError):
            raise ConfigurationError("omega_radial", f"omega_radial must be numeric, got {radial!r}")
        if min(omega_radial) <= 0 or not all(math.isfinite(v) for v in omega_radial):
            raise ConfigurationError("omega_radial", "omega_radial must be a positive frequency")
        if min(omega_radial) <= omega_z:
            logger.warning("omega_radial %s does not exceed omega_z %.6g rad/s; the chain may not be linear",
                           omega_radial, omega_z)

    sign_value = raw.get("sign_convention", SignConvention.MAGNETIC_NEGATIVE.value)
    try:
        sign_convention = SignConvention(sign_value)
    except ValueError:
        allowed = ", ".join(s.value for s in SignConvention)
        raise ConfigurationError("sign_convention", f"sign_convention must be one of {allowed}, got {sign_value!r}")

    cutoff = _integer(raw, "oracle_cutoff", 8)
    if cutoff < 1:
        raise ConfigurationError("oracle_cutoff", "oracle_cutoff must be ≥ 1")
    order = _integer(raw, "oracle_order", 3)
    if order not in (2, 3):
        raise ConfigurationError("oracle_order", "oracle_order must be 2 or 3")

    return Configuration(
        n_ions=n_ions,
        species_mass=mass,
        omega_z=omega_z,
        omega_radial=omega_radial,
        b0=_number(raw, "b0"),
        db_dz=_number(raw, "dB_dz"),
        d2b_dz2=_number(raw, "d2B_dz2"),
        db_dx=_number(raw, "dB_dx"),
        db_dy=_number(raw, "dB_dy"),
        g_factor_combination=_number(raw, "g_factor_combination", 1.0),
        alpha_n=_per_ion(raw, "alpha_n", n_ions, 0.0, integer=False),
        phonon_occupations=_per_ion(raw, "phonon_occupations", n_ions, 0, integer=True),
        transversal_occupations=_per_ion(raw, "transversal_occupations", n_ions, 0, integer=True),
        sign_convention=sign_convention,
        species=species if not mass_keys else None,
        n_range=parse_n_range(raw.get("n_range", (2, 40))),
        oracle_cutoff=cutoff,
        oracle_order=order,
    )


def load_config(path: str) -> Configuration:
    """
    Read a JSON configuration file and validate it.

    Raises:
        ConfigurationError: if the file is missing, not JSON, or invalid.
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            raw = json.load(file)
    except FileNotFoundError:
        raise ConfigurationError("--config", f"configuration file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigurationError("--config", f"configuration file {path} is not valid JSON: {e}")
    return validate_config(raw)
