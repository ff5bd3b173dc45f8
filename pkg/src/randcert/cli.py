"""Command-line entry point: ``randcert <subcommand> [options]``.

Exit status: 0 on success, 2 on invalid input, 3 when the request is valid
but unsupported (for instance exact evaluation without a closed form).
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bounds, classifiers, distributions, generalization, harness, smoothing
from .errors import CapabilityError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_CAPABILITY = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as e:
        raise ValidationError(f"cannot parse number list {text!r}") from e


def _beta(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    return math.inf if t in ("inf", "infinity") else float(t)


def _write(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        return v

    return json.dumps(clean(obj), indent=2, sort_keys=True)


def _load_dataset(path: str | None) -> harness.LabeledDataset:
    if path is None:
        return harness.benchmark_problem()[0]
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise ValidationError(f"cannot read dataset {path!r}: {e}") from e
    return harness.LabeledDataset(raw[:, :-1], raw[:, -1], provenance={"file": path})


def _eval_mode(args):
    if getattr(args, "exact", False):
        return classifiers.Exact()
    return classifiers.MonteCarlo(args.samples, args.seed)


def _load_classifier(args, sigma: float | None) -> classifiers.RandomizedClassifier:
    """Model file if given, else the least-squares benchmark base; ``sigma`` overrides the noise."""
    if getattr(args, "model", None):
        try:
            with open(args.model) as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"cannot read model {args.model!r}: {e}") from e
        clf = classifiers.model_from_dict(spec, classifiers.MonteCarlo(args.samples, args.seed))
        base, noise = clf.base, clf.noise
    else:
        base, noise = harness.benchmark_problem()[1], None
    if sigma is not None:
        noise = smoothing.GaussianNoiseSpec.isotropic(sigma) if sigma > 0 else None
    return classifiers.RandomizedClassifier(base, noise, _eval_mode(args))


def _iso_sigma(clf) -> float:
    if clf.noise is None or not clf.noise.is_isotropic:
        raise CapabilityError("certificates need isotropic Gaussian noise (pass --sigma)")
    return clf.noise.iso_sigma


# --------------------------------------------------------------------------
# subcommands


def cmd_divergence(args):
    kind = args.kind
    p, q = _floats(args.p), _floats(args.q)
    if kind == "tv":
        v = distributions.tv_distance(p, q)
    elif kind == "renyi":
        if args.beta is None:
            raise ValidationError("--kind renyi needs --beta")
        v = distributions.renyi_divergence(p, q, _beta(args.beta))
    elif kind == "kl":
        v = distributions.kl_divergence(p, q)
    elif kind == "max":
        v = distributions.renyi_divergence(p, q, math.inf)
    elif kind == "hellinger":
        v = distributions.hellinger_distance(p, q)
    elif kind == "separation":
        v = distributions.separation_distance(p, q)
    else:
        ground = distributions.GroundDistance(args.ground)
        v = distributions.wasserstein_distance(p, q, ground)
    _write(args, "inf" if math.isinf(v) else f"{v:.17g}")


def cmd_certify(args):
    beta = _beta(args.beta)
    renyi, tv = smoothing.certify_gaussian_preprocessing(args.sigma, args.alpha, beta)
    _write(args, _json({"radius": args.alpha, "renyi_eps": renyi.epsilon, "tv_eps": tv.epsilon, "beta": beta}))


def cmd_bound(args):
    beta = _beta(args.beta)
    renyi, tv = smoothing.certify_gaussian_preprocessing(args.sigma, args.alpha, beta)
    report = bounds.build_risk_gap_report(args.risk, tv, renyi, args.entropy_term)
    _write(args, _json(report.to_dict()))


def cmd_cover(args):
    try:
        pts = np.loadtxt(args.input, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise ValidationError(f"cannot read points {args.input!r}: {e}") from e
    fn = generalization.covering_exact if args.exact else generalization.covering_greedy
    res = fn(pts, args.alpha, args.norm)
    _write(args, _json({"n_balls": res.n_balls, "centers": res.centers.tolist(), "exact": res.exact}))


def _budget(args) -> harness.AttackBudget:
    return harness.AttackBudget(args.restarts, args.steps, args.samples, args.seed)


def cmd_evaluate(args):
    data = _load_dataset(args.data)
    clf = _load_classifier(args, args.sigma)
    beta = _beta(args.beta)
    risk, risk_se = harness.empirical_risk(clf, data, threads=args.threads)
    out = {
        "n": len(data),
        "seed": args.seed,
        "samples": None if clf.is_exact else args.samples,
        "clean_risk": risk,
        "clean_risk_se": risk_se,
        "alpha": args.alpha,
        "norm": args.norm,
    }
    if clf.noise is not None and clf.noise.is_isotropic:
        sigma = clf.noise.iso_sigma
        renyi, tv = smoothing.certify_gaussian_preprocessing(sigma, args.alpha, beta)
        ent = bounds.estimate_exp_neg_entropy(clf, data.points, threads=args.threads)
        report = bounds.build_risk_gap_report(risk, tv, renyi, ent)
        out.update(
            sigma=sigma,
            beta=beta,
            certificates={"tv": tv.to_dict(), "renyi": renyi.to_dict()},
            report=report.to_dict(),
            low_confidence_mass=bounds.low_confidence_mass_bound(clf, data, tv.epsilon, args.threads),
        )
    if args.alpha > 0:
        adv, adv_se = harness.empirical_adversarial_risk(
            clf, data, args.alpha, args.norm, _budget(args), args.threads
        )
        out.update(attacked_risk=adv, attacked_risk_se=adv_se)
    _write(args, _json(out))


def cmd_curve(args):
    data = _load_dataset(args.data)
    clf = _load_classifier(args, args.sigma)
    sigma = _iso_sigma(clf)
    m = None if args.exact else args.samples
    budget = _budget(args) if args.attack else None
    rows = harness.guaranteed_accuracy_curve(
        clf.base, data, sigma, _beta(args.beta), _floats(args.alphas), m, args.seed, budget, args.threads
    )
    _write(args, harness.curve_to_csv(rows))


def cmd_sweep(args):
    data = _load_dataset(args.data)
    clf = _load_classifier(args, None)
    m = None if args.exact else args.samples
    table = harness.noise_accuracy_sweep(clf.base, data, _floats(args.sigmas), m, args.seed, args.threads)
    lines = ["sigma,clean_acc"] + [f"{s!r},{a!r}" for s, a in table]
    _write(args, "\n".join(lines))


def cmd_attack(args):
    clf = _load_classifier(args, args.sigma)
    x = np.array(_floats(args.x))
    tau, loss = harness.attack_point(clf, x, args.y, args.alpha, args.norm, _budget(args))
    clean = classifiers.expected_01_loss(
        classifiers.predict_distribution(clf.with_samples(None), x), args.y
    )
    _write(args, _json({"tau": tau.tolist(), "attacked_loss": loss, "clean_loss": clean, "alpha": args.alpha}))


# --------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    g = c.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="master seed for Monte-Carlo streams")
    g.add_argument("--samples", type=int, default=10_000, help="Monte-Carlo samples per point (M)")
    g.add_argument("--out", default=None, help="write output here instead of stdout")
    g.add_argument("--config", default=None, help="JSON file whose keys mirror the long flags")
    g.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    return c


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="randcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]
    subs = {}

    s = sub.add_parser("divergence", parents=common, help="divergence between two label distributions")
    s.add_argument("--kind", required=True,
                   choices=["tv", "renyi", "kl", "max", "hellinger", "separation", "wasserstein"])
    s.add_argument("--beta", default=None)
    s.add_argument("--p", required=True)
    s.add_argument("--q", required=True)
    s.add_argument("--ground", default="trivial", choices=["trivial", "ordered_line"])
    s.set_defaults(func=cmd_divergence)
    subs["divergence"] = s

    s = sub.add_parser("certify", parents=common, help="Gaussian noise-injection certificates")
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", default="1")
    s.set_defaults(func=cmd_certify)
    subs["certify"] = s

    s = sub.add_parser("bound", parents=common, help="risk-gap report for given clean risk")
    s.add_argument("--risk", type=float, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", default="1")
    s.add_argument("--entropy-term", type=float, default=None, help="estimate of E[exp(-H(p(x)))]")
    s.set_defaults(func=cmd_bound)
    subs["bound"] = s

    s = sub.add_parser("cover", parents=common, help="covering number of a point set")
    s.add_argument("--input", required=True, help="headerless CSV, one point per row")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--norm", default="2", choices=["1", "2", "inf"])
    s.add_argument("--exact", action="store_true")
    s.set_defaults(func=cmd_cover)
    subs["cover"] = s

    def model_args(s, sigma_required=False):
        s.add_argument("--model", default=None, help="JSON model file (default: benchmark linear base)")
        s.add_argument("--sigma", type=float, default=None, required=sigma_required,
                       help="isotropic noise level; overrides the model's noise")
        s.add_argument("--exact", action="store_true", help="exact output distributions")

    def attack_args(s):
        s.add_argument("--norm", default="2", choices=["1", "2", "inf"])
        s.add_argument("--restarts", type=int, default=8)
        s.add_argument("--steps", type=int, default=10)

    s = sub.add_parser("evaluate", parents=common, help="clean/attacked risk and risk-gap report")
    model_args(s)
    attack_args(s)
    s.add_argument("--data", default=None, help="CSV: coordinates then label (default: benchmark)")
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--beta", default="1")
    s.set_defaults(func=cmd_evaluate)
    subs["evaluate"] = s

    s = sub.add_parser("curve", parents=common, help="guaranteed-accuracy curve as CSV")
    model_args(s)
    attack_args(s)
    s.add_argument("--data", default=None)
    s.add_argument("--beta", default="1")
    s.add_argument("--alphas", default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5")
    s.add_argument("--attack", action="store_true", help="also run the empirical attack per row")
    s.set_defaults(func=cmd_curve)
    subs["curve"] = s

    s = sub.add_parser("sweep", parents=common, help="clean accuracy across noise levels as CSV")
    s.add_argument("--model", default=None)
    s.add_argument("--exact", action="store_true")
    s.add_argument("--data", default=None)
    s.add_argument("--sigmas", default="0,0.1,0.25,0.5,1,2")
    s.set_defaults(func=cmd_sweep)
    subs["sweep"] = s

    s = sub.add_parser("attack", parents=common, help="attack a single point")
    model_args(s)
    attack_args(s)
    s.add_argument("--x", required=True, help="comma-separated coordinates")
    s.add_argument("--y", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.set_defaults(func=cmd_attack)
    subs["attack"] = s
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path!r}: {e}") from e
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items() if k not in ("config", "command")}


def _apply_config(argv: list[str], subs: dict):
    """Install config values as subcommand defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in subs), None)
    if not known.config or command is None:
        return
    cfg = _load_config(known.config)
    sp = subs[command]
    unknown = set(cfg) - {a.dest for a in sp._actions}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for a in sp._actions:
        if a.dest in cfg:
            a.required = False
    sp.set_defaults(**cfg)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config(argv, subs)
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)
        if args.samples < 1 or args.threads < 1:
            raise ValidationError("--samples and --threads must be >= 1")
        args.func(args)
    except CapabilityError as e:
        print(f"randcert: {e}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ValidationError, ValueError) as e:
        print(f"randcert: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
