# -*- coding: utf-8 -*-
################################################################################
# semiot/_config.py
# Versioned JSON configuration files, scale profiles, and the precedence rules
# that turn defaults, files, and flags into an effective configuration.

import json

from ._model import InstanceFormatError
from ._regression import RidgePolicy
from ._policy import ExplorationSchedule
from ._learner import LearnerConfig
from ._experiments import SyntheticSpec
from ._voronoi import VoronoiConfig


CONFIG_VERSION = "semiot-config-v1"

# Options shared by the commands that solve oracles.
_oracle_defaults = {"oracle_iters": 1_000_000, "oracle_tol": 0.03}
_learner_defaults = {"alpha": 50.0, "explore_mode": 'probabilistic',
                     "explore_a": 4.5, "rho_mode": 'constant', "rho": 0.001}

DEFAULTS = {
    'solve': dict(_oracle_defaults, iters=100_000, alpha=50.0,
                  trace_every=None, oracle='none', check_samples=1_000_000,
                  check_tol=0.03, seed=None),
    'learn': dict(_oracle_defaults, **_learner_defaults, horizon=100_000,
                  trace_every=None, oracle='long-sa', sigma=None, seed=None,
                  window=100),
    'bench': dict(_oracle_defaults, d=10, K=10, n_instances=100,
                  n_runs_per_instance=10, horizon=1000,
                  noise_sigmas=[0.02, 0.2], alpha=50.0,
                  explore_mode='probabilistic', explore_as=[4.5],
                  rho_mode='constant', rho=0.001, seed=0, oracle_tail=0.5,
                  window=100, rates=True, rate_instances=20,
                  rate_horizon=100_000),
    'voronoi': dict(_oracle_defaults, **_learner_defaults, horizon=100_000,
                    resolution=512, checkpoints=[10_000], window=10_000,
                    K=4, seed=0, sigma=0.02, min_separation=0.25)}

PROFILES = {
    'desk': {},
    'paper': {'solve': {"oracle_iters": 10_000_000, "oracle_tol": 0.01,
                        "check_tol": 0.01},
              'learn': {"oracle_iters": 10_000_000, "oracle_tol": 0.01},
              'bench': {"n_instances": 1000, "oracle_iters": 10_000_000,
                        "oracle_tol": 0.01},
              'voronoi': {"horizon": 1_000_000, "oracle_iters": 10_000_000,
                          "oracle_tol": 0.01}}}


def load_config(path):
    """Reads the option mapping of a `semiot-config-v1` file.

    A run manifest is accepted as well; its embedded configuration is used.
    Raises `InstanceFormatError` if the file is not valid JSON or has the
    wrong version.
    """
    try:
        with open(path, 'rt', encoding='utf-8') as fl:
            doc = json.load(fl)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: invalid JSON: {e}") from e
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict) or doc.get("version") != CONFIG_VERSION:
        raise InstanceFormatError(f"{path}: not a {CONFIG_VERSION} document")
    return {k: v for (k,v) in doc.items() if k != "version"}

def effective_config(command, profile='desk', file_options=None, flags=None):
    """Merges the options of a command: flags (entries that are not `None`)
    take precedence over file options, which take precedence over the
    profile's defaults. Unknown option names raise `InstanceFormatError`."""
    if command not in DEFAULTS:
        raise ValueError(f"unknown command {command!r}")
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    opts = dict(DEFAULTS[command], **PROFILES[profile].get(command, {}))
    for (src, d) in (('config file', file_options or {}), ('flags', flags or {})):
        unknown = set(d) - set(opts) - {'profile'}
        if unknown:
            raise InstanceFormatError(
                f"unknown {command} options in {src}: {sorted(unknown)}")
        opts.update((k,v) for (k,v) in d.items()
                    if v is not None and k != 'profile')
    opts['profile'] = profile
    return opts

def config_document(opts):
    """Returns the `semiot-config-v1` document of an effective configuration."""
    return dict(opts, version=CONFIG_VERSION)


#===============================================================================
# Builders

def learner_config(opts):
    return LearnerConfig(
        sa_alpha=float(opts["alpha"]),
        schedule=ExplorationSchedule(opts["explore_mode"],
                                     float(opts["explore_a"])),
        ridge=(RidgePolicy.paper() if opts["rho_mode"] == 'paper' else
               RidgePolicy.constant(float(opts["rho"]))))

def synthetic_spec(opts):
    rho = (RidgePolicy.paper() if opts["rho_mode"] == 'paper' else
           RidgePolicy.constant(float(opts["rho"])))
    return SyntheticSpec(
        d=int(opts["d"]), K=int(opts["K"]),
        n_instances=int(opts["n_instances"]),
        n_runs_per_instance=int(opts["n_runs_per_instance"]),
        horizon=int(opts["horizon"]),
        noise_sigmas=tuple(opts["noise_sigmas"]),
        sa_alpha=float(opts["alpha"]),
        explore_mode=opts["explore_mode"],
        explore_as=tuple(opts["explore_as"]),
        rho=rho,
        master_seed=int(opts["seed"]),
        oracle_iters=int(opts["oracle_iters"]),
        oracle_tol=float(opts["oracle_tol"]),
        oracle_tail=float(opts["oracle_tail"]),
        window=int(opts["window"]),
        rate_instances=int(opts["rate_instances"]),
        rate_horizon=int(opts["rate_horizon"]),
        profile=opts.get("profile", 'desk'))

def voronoi_config(opts):
    return VoronoiConfig(
        horizon=int(opts["horizon"]),
        learner=learner_config(opts),
        resolution=int(opts["resolution"]),
        checkpoints=tuple(int(n) for n in opts["checkpoints"]),
        window=int(opts["window"]),
        oracle_iters=int(opts["oracle_iters"]),
        oracle_tol=float(opts["oracle_tol"]))
