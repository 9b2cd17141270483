"""Hartree-Fock-Bogoliubov dynamics of trapped Bose gases.

Thin wrapper over the C++ core: spectral solver, thermal data, Fock space checks and the
experiment runner. Configs are plain dicts with the same schema as the JSON files.
"""

import json as _json
import os as _os

from ._bosedyn import (
    CheckReport,
    ConfigError,
    Grid,
    InvariantError,
    RunResult,
    Trap,
    __version__,
    alpha_exponent,
    commutator_identity,
    condensate_fraction,
    critical_temperature,
    eigenpairs,
    fock_dim,
    heat_kernel_check,
    schema_version,
    semiclassical_condensate_fraction,
    verify_bogoliubov_pdm,
    verify_weyl_shift,
    verify_wick,
)
from . import _bosedyn as _core


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def validate_config(config):
    """Raise ConfigError for an invalid config; return its hash otherwise."""
    return _core.validate_config(_text(config))


def _result(r):
    return {
        "exit_code": r.exit_code,
        "output_dir": r.output_dir,
        "summary": _json.loads(r.summary_json),
        "manifest": _json.loads(r.manifest_json),
    }


def run(config, output_dir):
    """Run the pipeline named by config["mode"] and return exit code, summary and manifest."""
    return _result(_core.run(_text(config), _os.fspath(output_dir)))


def sweep(config, n_values, output_dir):
    """Closeness sweep over the given particle numbers."""
    return _result(_core.sweep(_text(config), [float(n) for n in n_values], _os.fspath(output_dir)))


def verify_fock(config, output_dir):
    """Fock space identity checks with the config's fock section and seed."""
    return _result(_core.verify_fock(_text(config), _os.fspath(output_dir)))
