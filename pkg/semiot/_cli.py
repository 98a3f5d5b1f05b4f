# -*- coding: utf-8 -*-
################################################################################
# semiot/_cli.py
# The semiot command-line interface.

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .util import (file_checksum, write_csv)
from ._model import (InstanceFormatError, TransportInstance, DualWeights)
from ._regression import NumericError
from ._sa import run_known_costs
from ._learner import (CheckpointError, Learner, checkpoint, restore)
from ._oracle import (OracleError, Truth, solve_gstar_long_sa,
                      solve_gstar_quantile_k2, verify_targets, check_sampler,
                      score_run)
from ._experiments import (pcs_trajectory, rate_diagnostics, write_rates_csv,
                           write_instances)
from ._voronoi import (FacilityInstance, generate_facility_instance,
                       save_facility_instance, partition_study)
from ._config import (load_config, effective_config, config_document,
                      learner_config, synthetic_spec, voronoi_config)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_ORACLE = 3
EXIT_NUMERIC = 4
EXIT_USAGE = 64


#===============================================================================
# Run manifests

def git_revision(start=None):
    """Returns the commit hash of the git checkout containing `start` (the
    package directory by default), or `None` outside of a checkout."""
    d = os.path.abspath(start or os.path.dirname(__file__))
    while True:
        head = os.path.join(d, '.git', 'HEAD')
        if os.path.isfile(head):
            break
        parent = os.path.dirname(d)
        if parent == d:
            return None
        d = parent
    try:
        with open(head, 'rt', encoding='utf-8') as fl:
            text = fl.read().strip()
        if text.startswith('ref:'):
            ref = os.path.join(d, '.git', text.split(':', 1)[1].strip())
            with open(ref, 'rt', encoding='utf-8') as fl:
                return fl.read().strip()
        return text
    except OSError:
        return None

class RunManifest:
    """The record of one command run: the command and its inputs, the
    effective configuration, seeds, code version, timestamps, and the sha256
    checksum of every output file (relative to the output directory)."""
    __slots__ = ('command', 'inputs', 'config', 'seeds', 'version', 'git',
                 'started', 'finished', 'outputs', 'notes')
    def __init__(self, command, inputs, config, seeds=None):
        from . import __version__
        self.command = command
        self.inputs = dict(inputs)
        self.config = config_document(config)
        self.seeds = dict(seeds or {})
        self.version = __version__
        self.git = git_revision()
        self.started = time.strftime('%Y-%m-%dT%H:%M:%S%z')
        self.finished = None
        self.outputs = {}
        self.notes = []
    def finish(self, out_dir):
        """Checksums every file under `out_dir` (except the manifest)."""
        self.finished = time.strftime('%Y-%m-%dT%H:%M:%S%z')
        self.outputs = {}
        for (root, _, files) in os.walk(out_dir):
            for f in files:
                path = os.path.join(root, f)
                rel = os.path.relpath(path, out_dir).replace(os.sep, '/')
                if rel != 'manifest.json':
                    self.outputs[rel] = file_checksum(path)
        self.outputs = dict(sorted(self.outputs.items()))
        return self
    def to_json(self):
        return {k: getattr(self, k) for k in self.__slots__}
    def write(self, out_dir):
        path = os.path.join(out_dir, 'manifest.json')
        with open(path, 'wt', encoding='utf-8') as fl:
            json.dump(self.to_json(), fl, indent=2)
            fl.write('\n')
        return path
    @classmethod
    def load(cls, path):
        try:
            with open(path, 'rt', encoding='utf-8') as fl:
                doc = json.load(fl)
            obj = cls.__new__(cls)
            for k in cls.__slots__:
                setattr(obj, k, doc[k])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise InstanceFormatError(f"{path}: malformed manifest: {e}") from e
        return obj


#===============================================================================
# Shared helpers

def load_any_instance(path):
    """Reads a linear or facility instance from a JSON instance file."""
    try:
        with open(path, 'rt', encoding='utf-8') as fl:
            doc = json.load(fl)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: invalid JSON: {e}") from e
    if isinstance(doc, dict) and doc.get("kind") == "facility":
        return FacilityInstance.from_json(doc)
    return TransportInstance.from_json(doc)

def _write_json(path, doc):
    with open(path, 'wt', encoding='utf-8') as fl:
        json.dump(doc, fl, indent=2, sort_keys=True)
        fl.write('\n')
    return path

def _solve_oracle(kind, instance, opts):
    if kind == 'quantile':
        return solve_gstar_quantile_k2(instance, opts["oracle_iters"],
                                       tol=opts["oracle_tol"])
    return solve_gstar_long_sa(instance, opts["oracle_iters"],
                               alpha=opts.get("alpha", 50.0),
                               tol=opts["oracle_tol"])

def _truth(instance, oracle):
    beta = instance.beta if isinstance(instance, FacilityInstance) else \
           instance.costs.beta
    return Truth(instance.costs, oracle.g_star.g, beta)


def _resume_conflicts(args, cfg, saved):
    # Learner flags given on the command line that disagree with a checkpoint.
    differs = {'alpha': cfg.sa_alpha != saved.sa_alpha,
               'explore_mode': cfg.schedule.mode != saved.schedule.mode,
               'explore_a': cfg.schedule.a != saved.schedule.a,
               'rho_mode': cfg.ridge.mode != saved.ridge.mode,
               'rho': cfg.ridge.rho != saved.ridge.rho}
    return sorted('--' + k.replace('_', '-') for (k, d) in differs.items()
                  if d and getattr(args, k, None) is not None)


#===============================================================================
# Commands

def cmd_solve(args, opts, out, manifest):
    """Runs known-cost SA on an instance; writes `g.json`, `trace.csv`, and
    (with an oracle) `oracle.json`."""
    instance = load_any_instance(args.instance)
    if opts["seed"] is not None:
        instance = instance.reseed(opts["seed"])
    oracle = None
    if opts["oracle"] != 'none':
        oracle = _solve_oracle(opts["oracle"], instance, opts)
        _write_json(os.path.join(out, 'oracle.json'), oracle.to_json())
    (g, trace) = run_known_costs(instance, float(opts["alpha"]),
                                 int(opts["iters"]),
                                 trace_every=opts["trace_every"],
                                 g_star=None if oracle is None else oracle.g_star)
    trace.write_points_csv(os.path.join(out, 'trace.csv'),
                           None if oracle is None else oracle.g_star)
    doc = {"g": g.tolist(),
           "g_normalized": DualWeights(g).normalized().g.tolist(),
           "iters": int(opts["iters"]),
           "alpha": float(opts["alpha"])}
    if opts["check_samples"]:
        check = verify_targets(instance.costs, g,
                               check_sampler(instance.sampler), instance.p,
                               opts["check_samples"], opts["check_tol"])
        doc["residual"] = check.residuals.tolist()
        _write_json(os.path.join(out, 'g.json'), doc)
        if not check.passed:
            raise OracleError(f"assignment residual {np.max(check.residuals):.4g}"
                              f" exceeds {opts['check_tol']}", check.residuals)
    else:
        _write_json(os.path.join(out, 'g.json'), doc)
    manifest.inputs = {"instance": args.instance}
    manifest.seeds = {"instance": instance.seed}

def cmd_learn(args, opts, out, manifest):
    """Runs the learner on an instance; writes `trace.csv`, `points.csv`,
    `checkpoint.json`, and (with an oracle) `score.csv` and `oracle.json`."""
    instance = load_any_instance(args.instance)
    if opts["seed"] is not None:
        instance = instance.reseed(opts["seed"])
    if opts["sigma"] is not None:
        instance = instance.with_noise(float(opts["sigma"]))
    cfg = learner_config(opts)
    truth = None
    if opts["oracle"] != 'none':
        oracle = _solve_oracle(opts["oracle"], instance, opts)
        _write_json(os.path.join(out, 'oracle.json'), oracle.to_json())
        truth = _truth(instance, oracle)
    inputs = {"instance": args.instance}
    if args.resume:
        with open(args.resume, 'rb') as fl:
            state = restore(fl.read(),
                            None if args.rho_mode is None else cfg.ridge)
        conflicts = _resume_conflicts(args, cfg, state.config)
        if conflicts:
            raise CheckpointError(
                f"{args.resume}: {', '.join(conflicts)} differ from the "
                f"settings stored in the checkpoint")
        learner = Learner.from_state(instance, state)
        inputs["resume"] = args.resume
    else:
        learner = Learner(instance, cfg)
    trace = learner.run(int(opts["horizon"]), truth=truth,
                        trace_every=opts["trace_every"])
    trace.write_steps_csv(os.path.join(out, 'trace.csv'))
    trace.write_points_csv(os.path.join(out, 'points.csv'),
                           None if truth is None else truth.g_star)
    with open(os.path.join(out, 'checkpoint.json'), 'wb') as fl:
        fl.write(checkpoint(learner.persistent()))
    if truth is not None:
        report = score_run(trace, truth, int(opts["window"]))
        report.write_csv(os.path.join(out, 'score.csv'))
        logger.info("terminal plug-in pcs %.4f", report.terminal_pcs())
    manifest.inputs = inputs
    manifest.seeds = {"instance": instance.seed, "policy": instance.policy_seed}

def cmd_bench(args, opts, out, manifest):
    """Runs the synthetic sweep; writes `pcs.csv`, `summary.csv`,
    `rates.csv`, `instances/`, and `oracles/`."""
    spec = synthetic_spec(opts)
    write_instances(spec, os.path.join(out, 'instances'))
    odir = os.path.join(out, 'oracles')
    os.makedirs(odir, exist_ok=True)
    table = pcs_trajectory(spec, jobs=args.jobs, oracle_dir=odir)
    table.write_csv(os.path.join(out, 'pcs.csv'))
    rows = []
    for sigma in spec.noise_sigmas:
        for policy in spec.policies():
            rows.append([policy, sigma, table.terminal(policy, sigma),
                         table.gap(sigma, policy)])
    write_csv(os.path.join(out, 'summary.csv'),
              ['policy', 'sigma', 'terminal_pcs', 'gap'], rows)
    if opts["rates"]:
        fits = rate_diagnostics(spec, jobs=args.jobs, oracle_dir=odir)
        write_rates_csv(fits, os.path.join(out, 'rates.csv'))
    manifest.seeds = {"master": spec.master_seed}
    manifest.notes.append(f"synthetic instances use K = {spec.K} alternatives "
                          f"in d = {spec.d} dimensions")

def cmd_voronoi(args, opts, out, manifest):
    """Runs the partitioning study on a given or generated facility
    instance."""
    if args.instance:
        instance = load_any_instance(args.instance)
        if not isinstance(instance, FacilityInstance):
            raise InstanceFormatError(f"{args.instance}: not a facility instance")
        inputs = {"instance": args.instance}
    else:
        instance = generate_facility_instance(int(opts["K"]), int(opts["seed"]),
                                              float(opts["min_separation"]),
                                              sigma=float(opts["sigma"]))
        inputs = {}
    save_facility_instance(instance, os.path.join(out, 'instance.json'))
    partition_study(instance, voronoi_config(opts), out)
    manifest.inputs = inputs
    manifest.seeds = {"instance": instance.seed, "policy": instance.policy_seed}

def cmd_rerun(args, opts, out, manifest):
    """Re-runs the command recorded in a manifest into `out` and compares the
    output checksums; returns a nonzero exit code on any mismatch."""
    man = RunManifest.load(args.manifest)
    argv = [man.command]
    if man.inputs.get("instance"):
        argv += ['--instance', man.inputs["instance"]] \
                if man.command == 'voronoi' else [man.inputs["instance"]]
    if man.inputs.get("resume"):
        argv += ['--resume', man.inputs["resume"]]
    argv += ['--config', args.manifest, '--out', out,
             '--profile', man.config.get("profile", 'desk')]
    if args.jobs is not None:
        argv += ['--jobs', str(args.jobs)]
    rc = main(argv)
    if rc != EXIT_OK:
        return rc
    new = RunManifest.load(os.path.join(out, 'manifest.json'))
    bad = sorted(k for k in set(man.outputs) | set(new.outputs)
                 if man.outputs.get(k) != new.outputs.get(k))
    for k in bad:
        logger.error("output %s differs from the manifest", k)
    return EXIT_OK if len(bad) == 0 else EXIT_FAILED


#===============================================================================
# Argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")

def _positive_int(s):
    try:
        v = int(float(s))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v

def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v

def _float_list(s):
    try:
        return [float(u) for u in s.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {s!r}") from None

def _int_list(s):
    return [_positive_int(u) for u in s.split(',')]

def _learner_flags(p):
    p.add_argument('--alpha', type=_positive_float, dest='alpha',
                   help='SA stepsize constant (default 50)')
    p.add_argument('--explore-mode',
                   choices=('det', 'prob', 'deterministic', 'probabilistic'),
                   help='exploration schedule (default prob)')
    p.add_argument('--explore-a', type=_positive_float,
                   help='exploration parameter a (default 4.5)')
    p.add_argument('--rho-mode', choices=('constant', 'paper'))
    p.add_argument('--rho', type=_positive_float,
                   help='constant ridge regularization (default 0.001)')

def _oracle_flags(p):
    p.add_argument('--oracle-iters', type=_positive_int)
    p.add_argument('--oracle-tol', type=_positive_float)

def build_parser():
    parser = _Parser(prog='semiot',
                     description='Semidiscrete optimal transport with known '
                                 'and unknown linear costs.')
    from . import __version__
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', required=True, help='output directory')
    common.add_argument('--config', help='semiot-config-v1 JSON file')
    common.add_argument('--profile', choices=('desk', 'paper'), default='desk')
    common.add_argument('--jobs', type=_positive_int, default=None,
                        help='worker processes (default: logical cores)')
    common.add_argument('-v', '--verbose', action='count', default=0)
    common.add_argument('-q', '--quiet', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True,
                                parser_class=_Parser)
    # solve
    p = sub.add_parser('solve', parents=[common],
                       help='run known-cost SA on an instance')
    p.add_argument('instance')
    p.add_argument('--iters', type=_positive_int)
    p.add_argument('--alpha', type=_positive_float)
    p.add_argument('--trace-every', type=_positive_int)
    p.add_argument('--oracle', choices=('none', 'long-sa', 'quantile'))
    p.add_argument('--check-samples', type=int)
    p.add_argument('--check-tol', type=_positive_float)
    p.add_argument('--seed', type=int)
    _oracle_flags(p)
    p.set_defaults(run=cmd_solve)
    # learn
    p = sub.add_parser('learn', parents=[common],
                       help='run the learner with unknown costs')
    p.add_argument('instance')
    p.add_argument('--horizon', type=_positive_int)
    p.add_argument('--trace-every', type=_positive_int)
    p.add_argument('--oracle', choices=('none', 'long-sa', 'quantile'))
    p.add_argument('--sigma', type=float)
    p.add_argument('--seed', type=int)
    p.add_argument('--window', type=_positive_int)
    p.add_argument('--resume', help='checkpoint to continue from')
    _learner_flags(p)
    _oracle_flags(p)
    p.set_defaults(run=cmd_learn)
    # bench
    p = sub.add_parser('bench', parents=[common],
                       help='run the synthetic correct-selection sweep')
    p.add_argument('--spec', dest='config', help='alias of --config')
    p.add_argument('--n-instances', type=_positive_int)
    p.add_argument('--runs', type=_positive_int, dest='n_runs_per_instance')
    p.add_argument('--horizon', type=_positive_int)
    p.add_argument('-d', type=_positive_int, dest='d')
    p.add_argument('-K', type=_positive_int, dest='K')
    p.add_argument('--sigmas', type=_float_list, dest='noise_sigmas')
    p.add_argument('--explore-as', type=_float_list)
    p.add_argument('--seed', type=int)
    p.add_argument('--no-rates', action='store_const', const=False,
                   dest='rates')
    p.add_argument('--rate-instances', type=_positive_int)
    p.add_argument('--rate-horizon', type=_positive_int)
    _learner_flags(p)
    _oracle_flags(p)
    p.set_defaults(run=cmd_bench)
    # voronoi
    p = sub.add_parser('voronoi', parents=[common],
                       help='learn a facility partition')
    p.add_argument('--instance', help='facility instance (default: generated)')
    p.add_argument('--horizon', type=_positive_int)
    p.add_argument('--resolution', type=_positive_int)
    p.add_argument('--checkpoints', type=_int_list)
    p.add_argument('-K', type=_positive_int, dest='K')
    p.add_argument('--seed', type=int)
    p.add_argument('--sigma', type=float)
    p.add_argument('--min-separation', type=_positive_float)
    _learner_flags(p)
    _oracle_flags(p)
    p.set_defaults(run=cmd_voronoi)
    # rerun
    p = sub.add_parser('rerun', parents=[common],
                       help='re-run a command from its manifest')
    p.add_argument('manifest')
    p.set_defaults(run=cmd_rerun)
    return parser

# Argument names that are not configuration options.
_non_options = ('command', 'run', 'out', 'config', 'profile', 'jobs',
                'verbose', 'quiet', 'instance', 'resume', 'manifest')

def main(argv=None):
    """Runs the command line `argv` and returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    level = (logging.ERROR if args.quiet else
             [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)])
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('semiot').setLevel(level)
    try:
        if args.command == 'rerun':
            os.makedirs(args.out, exist_ok=True)
            return args.run(args, {}, args.out, None)
        if args.command == 'bench' and args.explore_a is not None:
            args.explore_as = [args.explore_a]
        flags = {k: v for (k,v) in vars(args).items()
                 if k not in _non_options and not
                 (args.command == 'bench' and k == 'explore_a')}
        file_opts = load_config(args.config) if args.config else None
        opts = effective_config(args.command, args.profile, file_opts, flags)
        os.makedirs(args.out, exist_ok=True)
        manifest = RunManifest(args.command, {}, opts)
        args.run(args, opts, args.out, manifest)
        manifest.finish(args.out).write(args.out)
        return EXIT_OK
    except OracleError as e:
        logger.error("oracle failure: %s", e)
        return EXIT_ORACLE
    except NumericError as e:
        logger.error("numeric failure: %s", e)
        return EXIT_NUMERIC
    except (CheckpointError, InstanceFormatError, OSError, ValueError) as e:
        logger.error("input error: %s", e)
        return EXIT_INPUT

def console_main():
    sys.exit(main())
