"""INI experiment configs.

Four sections: [grid], [channel], [code], [sim]. Keys are lowercase;
unknown sections or keys are hard errors so typos cannot silently fall
back to defaults. [code] is optional (uncoded run). Example::

    [grid]
    m = 4
    n = 8

    [channel]
    paths = 2
    l_max = 3
    k_max = 5

    [code]
    name = A

    [sim]
    detector = lmmse
    snr_db = 9, 10, 11
    data_len = 15
    max_trials = 200000
"""

import configparser

from .channel import ChannelProfile
from .coding import CODE_REGISTRY, ConvCode, code_from_octal, generators_octal, get_code
from .ddmatrix import OtfsGrid
from .errors import ConfigError
from .montecarlo import SimConfig

_GRID_KEYS = {"m", "n", "delta_f_hz"}
_CHANNEL_KEYS = {
    "paths",
    "l_max",
    "k_max",
    "rician_mean_real",
    "rician_mean_imag",
    "distinct_bins",
    "power_profile",
}
_CODE_KEYS = {"name", "generators", "interleaver_seed"}
_SIM_KEYS = {
    "waveform",
    "detector",
    "snr_db",
    "data_len",
    "max_trials",
    "max_frame_errors",
    "master_seed",
    "es",
    "llr_mode",
}
_SECTIONS = {
    "grid": _GRID_KEYS,
    "channel": _CHANNEL_KEYS,
    "code": _CODE_KEYS,
    "sim": _SIM_KEYS,
}


class _Section:
    """One validated section; every get marks the key as consumed."""

    def __init__(self, name, parser):
        self.name = name
        self.present = parser.has_section(name)
        self.raw = dict(parser.items(name)) if self.present else {}

    def check_known(self, allowed):
        for key in self.raw:
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}' in section [{self.name}]", key=key)

    def get(self, key, default=None, required=False):
        if key in self.raw:
            return self.raw[key]
        if required:
            raise ConfigError(f"missing required key '{key}' in section [{self.name}]", key=key)
        return default

    def get_typed(self, key, conv, default=None, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (ValueError, TypeError):
            raise ConfigError(
                f"key '{key}' in section [{self.name}] has invalid value '{raw}'", key=key
            ) from None


def _to_bool(raw):
    lowered = str(raw).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _to_snr_list(raw):
    vals = []
    for tok in str(raw).split(","):
        tok = tok.strip()
        if not tok:
            continue
        vals.append(float(tok))
    if not vals:
        raise ValueError(raw)
    for v in vals:
        if v != v or v == float("-inf"):
            raise ValueError(raw)
    return tuple(vals)


def parse_config(text):
    """Parse INI text into a validated SimConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    if parser.defaults():
        raise ConfigError("a [DEFAULT] section is not supported")
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")

    grid_s = _Section("grid", parser)
    chan_s = _Section("channel", parser)
    code_s = _Section("code", parser)
    sim_s = _Section("sim", parser)
    for sec, allowed in (
        (grid_s, _GRID_KEYS),
        (chan_s, _CHANNEL_KEYS),
        (code_s, _CODE_KEYS),
        (sim_s, _SIM_KEYS),
    ):
        if not sec.present and sec.name in ("grid", "channel", "sim"):
            raise ConfigError(f"missing required section [{sec.name}]")
        sec.check_known(allowed)

    grid = OtfsGrid(
        m=grid_s.get_typed("m", int, required=True),
        n=grid_s.get_typed("n", int, required=True),
        delta_f=grid_s.get_typed("delta_f_hz", float, default=15000.0),
    )

    mean = complex(
        chan_s.get_typed("rician_mean_real", float, default=0.0),
        chan_s.get_typed("rician_mean_imag", float, default=0.0),
    )
    power_profile = str(chan_s.get("power_profile", default="uniform")).strip().lower()
    if power_profile != "uniform":
        raise ConfigError(
            f"power_profile '{power_profile}' is not supported (only 'uniform')",
            key="power_profile",
        )
    profile = ChannelProfile(
        paths=chan_s.get_typed("paths", int, required=True),
        l_max=chan_s.get_typed("l_max", int, required=True),
        k_max=chan_s.get_typed("k_max", int, required=True),
        mean=mean,
        distinct_bins=chan_s.get_typed("distinct_bins", _to_bool, default=True),
    )

    code = None
    interleaver_seed = None
    if code_s.present:
        name = str(code_s.get("name", default="uncoded")).strip()
        gens = code_s.get("generators")
        if name.lower() == "uncoded":
            if gens is not None:
                raise ConfigError("generators given for an uncoded run", key="generators")
        elif name.lower() == "custom":
            if gens is None:
                raise ConfigError("name=custom requires a generators key", key="generators")
            octals = [tok.strip() for tok in str(gens).split(",") if tok.strip()]
            try:
                code = code_from_octal(octals, name="custom")
            except (ValueError, TypeError):
                raise ConfigError(
                    f"invalid octal generator list '{gens}'", key="generators"
                ) from None
        else:
            code = get_code(name)
            if gens is not None:
                octals = tuple(tok.strip() for tok in str(gens).split(",") if tok.strip())
                if octals != generators_octal(code):
                    raise ConfigError(
                        f"generators '{gens}' conflict with named code {code.name} "
                        f"({','.join(generators_octal(code))})",
                        key="generators",
                    )
        interleaver_seed = code_s.get_typed("interleaver_seed", int)
        if code is None and interleaver_seed is not None:
            raise ConfigError("interleaver_seed given for an uncoded run", key="interleaver_seed")

    llr_mode = str(sim_s.get("llr_mode", default="sum")).strip().lower()
    if llr_mode not in ("sum", "maxlog"):
        raise ConfigError(f"llr_mode must be 'sum' or 'maxlog', got '{llr_mode}'", key="llr_mode")

    cfg = SimConfig(
        grid=grid,
        profile=profile,
        snr_db=sim_s.get_typed("snr_db", _to_snr_list, required=True),
        max_trials=sim_s.get_typed("max_trials", int, required=True),
        waveform=str(sim_s.get("waveform", default="otfs")).strip().lower(),
        code=code,
        data_len=sim_s.get_typed("data_len", int),
        detector=str(sim_s.get("detector", default="lmmse")).strip().lower(),
        max_frame_errors=sim_s.get_typed("max_frame_errors", int, default=100),
        master_seed=sim_s.get_typed("master_seed", int, default=0),
        es=sim_s.get_typed("es", float, default=1.0),
        interleaver_seed=interleaver_seed,
        llr_exact=(llr_mode == "sum"),
    )
    cfg.validate()
    return cfg


def load_config(path):
    """Read and validate a config file; see parse_config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return parse_config(text)


def _ini_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


def config_dict_to_ini(resolved):
    """Render a resolved-config dict (config_to_dict layout, as embedded
    in run manifests) back into parseable INI text."""
    lines = []
    for section in ("grid", "channel", "code", "sim"):
        if section not in resolved:
            continue
        lines.append(f"[{section}]")
        for key, value in resolved[section].items():
            lines.append(f"{key} = {_ini_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_to_dict(cfg):
    """Resolved-config snapshot with every default made explicit.

    The layout mirrors the INI sections, so the snapshot documents
    exactly what ran and can be transcribed back into a config file.
    """
    out = {
        "grid": {"m": cfg.grid.m, "n": cfg.grid.n, "delta_f_hz": cfg.grid.delta_f},
        "channel": {
            "paths": cfg.profile.paths,
            "l_max": cfg.profile.l_max,
            "k_max": cfg.profile.k_max,
            "rician_mean_real": cfg.profile.mean.real,
            "rician_mean_imag": cfg.profile.mean.imag,
            "distinct_bins": cfg.profile.distinct_bins,
            "power_profile": "uniform",
        },
        "sim": {
            "waveform": cfg.waveform,
            "detector": cfg.detector,
            "snr_db": list(cfg.snr_db),
            "data_len": cfg.n_info,
            "max_trials": cfg.max_trials,
            "max_frame_errors": cfg.max_frame_errors,
            "master_seed": cfg.master_seed,
            "es": cfg.es,
            "llr_mode": "sum" if cfg.llr_exact else "maxlog",
        },
    }
    if cfg.coded:
        name = cfg.code.name if cfg.code.name in CODE_REGISTRY else "custom"
        out["code"] = {
            "name": name,
            "generators": ",".join(generators_octal(cfg.code)),
            "interleaver_seed": cfg.resolved_interleaver_seed,
        }
    else:
        out["code"] = {"name": "uncoded"}
    return out
