"""Experiment configuration, named experiment runners, property-verification
suites, figure grids, and JSON report assembly.

Verdict records carry the acceptance-criterion identifier (AC1..AC10) they
substantiate, so a report is auditable against the stated claims.  All
randomness flows from one 64-bit master seed through per-role streams
("algorithm", "adversary", "certifier").
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from nearstat import adversaries, solvers, stationarity, zoo
from nearstat.errors import ConfigError
from nearstat.oracle_game import min_distance_to, play
from nearstat.vectorspace import derive_stream, sample_ball_batch

_SQRT2 = math.sqrt(2.0)

ENV_OUTPUT_DIR = "NEARSTAT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "nearstat_out"

EXPERIMENT_NAMES = (
    "quad_lower_bound",
    "det_lower_bound",
    "theorem1",
    "theorem1_randomized",
)
VERIFY_SUITES = ("prop1", "channel", "quadratic", "remark", "all")


def role_streams(seed: int) -> dict[str, np.random.Generator]:
    return {role: derive_stream(seed, role) for role in ("algorithm", "adversary", "certifier")}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    experiment: str
    T: int = 10
    d: int | None = None
    seed: int = 12345
    trials: int = 100
    solver: dict = field(default_factory=lambda: {"name": "subgrad"})
    adversary: dict = field(default_factory=dict)
    function: dict = field(default_factory=dict)
    output_path: str | None = None
    tolerances: dict = field(default_factory=dict)

    _FIELDS = (
        "experiment",
        "T",
        "d",
        "seed",
        "trials",
        "solver",
        "adversary",
        "function",
        "output_path",
        "tolerances",
    )

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in doc:
            raise ConfigError("config needs an 'experiment' field")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENT_NAMES}"
            )
        if not isinstance(self.T, int) or self.T < 1:
            raise ConfigError("T must be an integer >= 1")
        if self.d is None:
            self.d = 2 * self.T
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError("d must be an integer >= 1")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.experiment in ("det_lower_bound", "theorem1") and self.d < 2 * self.T:
            raise ConfigError(f"experiment {self.experiment!r} needs d >= 2T")
        if self.experiment == "theorem1_randomized" and self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not isinstance(self.solver, dict) or "name" not in self.solver:
            raise ConfigError("solver must be a table with a 'name'")
        return self

    def echo(self) -> dict:
        return dataclasses.asdict(self)

    def build_solver(self):
        params = {k: v for k, v in self.solver.items() if k != "name"}
        return solvers.build_solver(self.solver["name"], **params)


def parse_override_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(doc: dict, dotted: str, raw_value: str) -> None:
    """Set ``doc[a][b]... = value`` for a flag like ``--a.b`` (JSON-parsed)."""
    parts = dotted.split(".")
    if parts[0] not in ExperimentConfig._FIELDS:
        raise ConfigError(f"unknown config field {parts[0]!r} in override --{dotted}")
    node = doc
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = node[p] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"override --{dotted} descends into non-table field {p!r}")
        node = nxt
    node[parts[-1]] = parse_override_value(raw_value)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    criterion: str  # acceptance criterion id, e.g. "AC1"
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "passed": self.passed,
            "details": self.details,
        }


@dataclass
class Report:
    kind: str
    config: dict
    verdicts: list[CheckResult]
    records: dict = field(default_factory=dict)
    certificates: list[dict] = field(default_factory=list)
    timing_seconds: float = 0.0
    transcripts: dict = field(default_factory=dict)  # name -> JSONL text

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "verdicts": [v.to_json() for v in self.verdicts],
            "records": self.records,
            "certificates": self.certificates,
            "timing_seconds": self.timing_seconds,
            "all_passed": self.all_passed,
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def resolve_output_dir(config_path: str | None) -> str:
    if config_path:
        return config_path
    return os.environ.get(ENV_OUTPUT_DIR, DEFAULT_OUTPUT_DIR)


def write_report_files(report: Report, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json_str())
        fh.write("\n")
    written.append(report_path)
    for name, jsonl in report.transcripts.items():
        path = os.path.join(out_dir, f"{name}.jsonl")
        with open(path, "w") as fh:
            fh.write(jsonl)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# named experiments
# ---------------------------------------------------------------------------


def run_quad_lower_bound(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    streams = role_streams(cfg.seed)
    hq = adversaries.HardQuadratic(T=cfg.T, d=cfg.d)
    descriptor = cfg.build_solver()
    transcript = play(
        descriptor, adversaries.chain_quadratic_oracle(hq), cfg.T, cfg.d, rng=streams["algorithm"]
    )
    mind = min_distance_to(transcript, hq.x_star)
    bound = math.exp(-cfg.T)
    verdict = CheckResult(
        criterion="AC1",
        name="min iterate distance to minimizer >= exp(-T)",
        passed=mind >= bound,
        details={"min_distance": mind, "bound": bound, "solver": descriptor.name},
    )
    distances = [float(np.linalg.norm(q - hq.x_star)) for q in transcript.queries]
    return Report(
        kind="experiment:quad_lower_bound",
        config=cfg.echo(),
        verdicts=[verdict],
        records={"distances": distances},
        timing_seconds=time.perf_counter() - start,
        transcripts={"transcript": transcript.to_jsonl()},
    )


def run_det_lower_bound(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    streams = role_streams(cfg.seed)
    hq = adversaries.HardQuadratic(T=cfg.T, d=cfg.d)
    rb = adversaries.RotationBuilder(base=hq)
    descriptor = cfg.build_solver()
    transcript = play(
        descriptor, adversaries.rotation_oracle(rb), cfg.T, cfg.d, rng=streams["algorithm"]
    )
    rotated = rb.materialized_map()
    mind = min_distance_to(transcript, rotated.x_star)
    bound = math.exp(-cfg.T)
    rel_errs = []
    for q, reply in transcript.entries:
        direct = rotated.quad_oracle(q)
        val_err = abs(reply.value - direct.value) / max(1.0, abs(direct.value))
        grad_err = float(
            np.linalg.norm(reply.subgrad - direct.subgrad)
            / max(1.0, np.linalg.norm(direct.subgrad))
        )
        rel_errs.append(max(val_err, grad_err))
    worst = max(rel_errs)
    verdicts = [
        CheckResult(
            criterion="AC2",
            name="min iterate distance to rotated minimizer >= exp(-T)",
            passed=mind >= bound,
            details={"min_distance": mind, "bound": bound, "solver": descriptor.name},
        ),
        CheckResult(
            criterion="AC2",
            name="materialized replies match recorded replies (relative 1e-12)",
            passed=worst <= 1e-12,
            details={"worst_relative_error": worst},
        ),
    ]
    return Report(
        kind="experiment:det_lower_bound",
        config=cfg.echo(),
        verdicts=verdicts,
        records={"reply_relative_errors": rel_errs},
        timing_seconds=time.perf_counter() - start,
        transcripts={"transcript": transcript.to_jsonl()},
    )


def run_theorem1(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    streams = role_streams(cfg.seed)
    descriptor = cfg.build_solver()
    acfg = adversaries.ChannelAdversaryConfig(
        mode=cfg.adversary.get("mode", adversaries.MODE_DETERMINISTIC),
        w_norm=cfg.adversary.get("w_norm"),
    )
    instance, diag = adversaries.build_channel_instance(
        acfg, descriptor, cfg.T, cfg.d, rng_state=streams
    )
    base_transcript = diag["transcript"]
    replay = play(descriptor, instance.eval, cfg.T, cfg.d, rng=None)
    bitwise = all(
        np.array_equal(q1, q2)
        and r1.value == r2.value
        and np.array_equal(r1.subgrad, r2.subgrad)
        for (q1, r1), (q2, r2) in zip(base_transcript.entries, replay.entries)
    )
    h_values = [reply.value for _, reply in replay.entries]
    min_h = min(h_values)
    certs = [stationarity.near_stationarity_distance_lb(instance, q) for q in replay.queries]
    min_cert = min(c.value for c in certs)
    h_at_zero = instance.eval(np.zeros(cfg.d)).value
    verdicts = [
        CheckResult(
            criterion="AC6",
            name="composed-channel iterates identical to distance-oracle iterates",
            passed=bitwise,
            details={"solver": descriptor.name},
        ),
        CheckResult(
            criterion="AC6",
            name="min composed value over iterates > 0",
            passed=min_h > 0.0,
            details={"min_value": min_h},
        ),
        CheckResult(
            criterion="AC6",
            name="near-stationarity distance certificate >= 1/7 at every iterate",
            passed=min_cert >= 1.0 / 7.0,
            details={"min_certificate": min_cert},
        ),
        CheckResult(
            criterion="AC6",
            name="composed value at the origin <= 1/2",
            passed=h_at_zero <= 0.5,
            details={"value_at_zero": h_at_zero},
        ),
    ]
    return Report(
        kind="experiment:theorem1",
        config=cfg.echo(),
        verdicts=verdicts,
        records={
            "h_values": h_values,
            "distances": diag["distances"],
            "alignments": diag["alignments"],
            "coincidence_hypothesis": diag["coincidence_hypothesis"],
            "w_norm": diag["w_norm"],
        },
        certificates=[c.to_json() for c in certs],
        timing_seconds=time.perf_counter() - start,
        transcripts={
            "transcript": replay.to_jsonl(),
            "transcript_base": base_transcript.to_jsonl(),
        },
    )


def run_theorem1_randomized(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    streams = role_streams(cfg.seed)
    descriptor = cfg.build_solver()
    acfg = adversaries.ChannelAdversaryConfig(
        mode=adversaries.MODE_RANDOMIZED, w_norm=cfg.adversary.get("w_norm")
    )
    threshold = 1.0 / 3.0
    max_alignments = []
    failures = 0
    for _ in range(cfg.trials):
        _, diag = adversaries.build_channel_instance(
            acfg, descriptor, cfg.T, cfg.d, rng_state=streams
        )
        max_alignments.append(diag["max_alignment"])
        if diag["max_alignment"] >= threshold:
            failures += 1
    fraction = failures / cfg.trials
    analytic = cfg.T * math.exp(-cfg.d / 18.0)
    verdict = CheckResult(
        criterion="AC7",
        name="fraction of trials with max alignment >= 1/3 is <= 2%",
        passed=fraction <= 0.02,
        details={
            "failures": failures,
            "trials": cfg.trials,
            "fraction": fraction,
            "analytic_bound": analytic,
        },
    )
    return Report(
        kind="experiment:theorem1_randomized",
        config=cfg.echo(),
        verdicts=[verdict],
        records={"max_alignments": max_alignments},
        timing_seconds=time.perf_counter() - start,
    )


EXPERIMENTS = {
    "quad_lower_bound": run_quad_lower_bound,
    "det_lower_bound": run_det_lower_bound,
    "theorem1": run_theorem1,
    "theorem1_randomized": run_theorem1_randomized,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    return EXPERIMENTS[cfg.experiment](cfg)


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


def verify_prop1(seed: int) -> list[CheckResult]:
    """The spiral claims: stencil hull stationarity, gradient norm range."""
    rng = derive_stream(seed, "certifier")
    spiral = zoo.Spiral(delta=1.0)
    checks = []

    stencil = [np.array([0.0, 1.0]), np.array([0.0, -1.0])]
    cert = stationarity.certify_delta_eps(spiral.eval, np.zeros(2), 1.0, 1e-8, stencil)
    checks.append(
        CheckResult(
            "AC4",
            "stencil min-norm at the origin <= 1e-8",
            cert.certified and cert.value <= 1e-8,
            {"value": cert.value},
        )
    )

    pts = sample_ball_batch(2, 1.0, 100_000, rng)
    _, grads, _ = spiral.eval_batch(pts)
    min_inner = float(np.linalg.norm(grads, axis=1).min())
    checks.append(
        CheckResult(
            "AC4",
            "min gradient norm over the delta-ball >= 1 - 1e-9",
            min_inner >= 1.0 - 1e-9,
            {"min_gradient_norm": min_inner},
        )
    )

    pts2 = sample_ball_batch(2, 2.0, 100_000, rng)
    _, grads2, _ = spiral.eval_batch(pts2)
    max_outer = float(np.linalg.norm(grads2, axis=1).max())
    checks.append(
        CheckResult(
            "AC4",
            "max gradient norm over the 2 delta-ball <= 2 pi + 1e-9",
            max_outer <= 2.0 * math.pi + 1e-9,
            {"max_gradient_norm": max_outer},
        )
    )

    descriptor = solvers.goldstein_descent(delta=1.0, stencil=stencil)
    policy = descriptor.fresh_policy(2, None)
    entries = []
    for _ in range(1 + len(stencil) + 1):
        q = policy.next_query(entries)
        entries.append((q, spiral.eval(q)))
    stopped_small = (
        policy.stopped and bool(policy.min_norm_history) and policy.min_norm_history[0] <= 1e-8
    )
    checks.append(
        CheckResult(
            "AC4",
            "stencil-driven hull descent stops with min-norm <= 1e-8",
            stopped_small,
            {"min_norm_history": policy.min_norm_history},
        )
    )
    return checks


def verify_channel(seed: int) -> list[CheckResult]:
    """Lipschitz ratio, no-small-subgradient, and per-region bound consistency."""
    rng = derive_stream(seed, "certifier")
    d = 4
    w = np.zeros(d)
    w[0] = 0.3
    instance = zoo.ChannelInstance(w=w)
    checks = []

    n_pairs = 100_000
    A = rng.uniform(-2.0, 2.0, size=(n_pairs, d))
    B = A + rng.normal(size=(n_pairs, d)) * rng.uniform(1e-6, 1.0, size=(n_pairs, 1))
    va, _, _, _ = instance.eval_batch(A)
    vb, _, _, _ = instance.eval_batch(B)
    gaps = np.linalg.norm(A - B, axis=1)
    ratios = np.abs(va - vb) / np.where(gaps > 0, gaps, 1.0)
    max_ratio = float(ratios.max())
    checks.append(
        CheckResult(
            "AC5",
            "value ratio over random pairs <= 7 + 1e-6",
            max_ratio <= 7.0 + 1e-6,
            {"max_ratio": max_ratio, "pairs": n_pairs},
        )
    )

    n_bulk = 700_000
    bulk = rng.uniform(-2.0, 2.0, size=(n_bulk, d))
    near_zero = rng.normal(size=(100_000, d)) * rng.uniform(0.0, 1e-6, size=(100_000, 1))
    near_minus_w = -w + rng.normal(size=(100_000, d)) * rng.uniform(0.0, 1e-6, size=(100_000, 1))
    # Dense sampling around the hinge boundary cone: s = y + w at 60 degrees
    # from w, where the hinge argument changes sign.
    n_cone = 100_000
    tang = rng.normal(size=(n_cone, d))
    tang[:, 0] = 0.0
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    radii = rng.uniform(1e-3, 2.0, size=(n_cone, 1))
    wbar = w / np.linalg.norm(w)
    cone = radii * (0.5 * wbar + (math.sqrt(3.0) / 2.0) * tang)
    cone += rng.normal(size=(n_cone, d)) * rng.uniform(0.0, 1e-9, size=(n_cone, 1))
    near_boundary = cone - w
    samples = np.vstack([bulk, near_zero, near_minus_w, near_boundary])
    min_norm = math.inf
    for block in np.array_split(samples, 10):
        _, grads, _, _ = instance.eval_batch(block)
        min_norm = min(min_norm, float(np.linalg.norm(grads, axis=1).min()))
    checks.append(
        CheckResult(
            "AC5",
            "subgradient norms over 1e6 samples >= 1/sqrt(2) - 1e-6",
            min_norm >= 1.0 / _SQRT2 - 1e-6,
            {"min_subgradient_norm": min_norm, "samples": len(samples)},
        )
    )

    n_cons = 100_000
    pts = rng.uniform(-2.0, 2.0, size=(n_cons, d))
    _, grads, diffs, regions = instance.eval_batch(pts)
    bounds = np.where(regions == zoo.REGION_HINGE_BOUNDARY, 1.0 / _SQRT2, 1.0)
    norms = np.linalg.norm(grads, axis=1)
    consistent = bool(np.all(norms[diffs] >= bounds[diffs] - 1e-9))
    spot_rng = derive_stream(seed, "adversary")
    spot_idx = spot_rng.choice(n_cons, size=200, replace=False)
    spot_ok = True
    for i in spot_idx:
        cert = stationarity.subdiff_norm_lower_bound(instance, pts[i])
        if norms[i] < cert.value - 1e-9:
            spot_ok = False
            break
    checks.append(
        CheckResult(
            "AC5",
            "sampled gradient norms respect the per-region analytic bound",
            consistent and spot_ok,
            {"points": n_cons, "certified_spot_checks": len(spot_idx)},
        )
    )
    return checks


def verify_quadratic(seed: int) -> list[CheckResult]:
    """Chain-structure facts plus the span lower bound for bundled solvers."""
    checks = []
    spectra = {}
    ok_spec = True
    for T in (2, 5, 10):
        hq = adversaries.HardQuadratic(T=T, d=2 * T)
        lo, hi = adversaries.chain_spectrum_check(hq)
        spectra[T] = (lo, hi)
        ok_spec &= 0.5 - 1e-9 <= lo and hi <= 1.0 + 1e-9
    checks.append(
        CheckResult(
            "AC3",
            "spectrum of M within [1/2, 1] for T in {2, 5, 10}",
            ok_spec,
            {"extremes": {str(t): list(v) for t, v in spectra.items()}},
        )
    )

    hq = adversaries.HardQuadratic(T=10, d=20)
    _, grad_star = adversaries.chain_value_grad(hq, hq.x_star)
    grad_inf = float(np.max(np.abs(grad_star)))
    checks.append(
        CheckResult(
            "AC3",
            "gradient at the minimizer vanishes (sup-norm <= 1e-12)",
            grad_inf <= 1e-12,
            {"grad_inf_norm": grad_inf},
        )
    )

    id1 = abs(1.0 - 6.0 * hq.q + hq.q * hq.q)
    id2 = abs((hq.k + 4.0) * hq.q - 1.0)
    checks.append(
        CheckResult(
            "AC3",
            "defining identities of q and k hold to 1e-14",
            id1 <= 1e-14 and id2 <= 1e-14,
            {"residuals": [id1, id2]},
        )
    )

    norm_bound = math.sqrt((_SQRT2 - 1.0) / 2.0)
    x_star_norm = float(np.linalg.norm(hq.x_star))
    checks.append(
        CheckResult(
            "AC3",
            "minimizer norm <= sqrt((sqrt 2 - 1)/2) + 1e-12",
            x_star_norm <= norm_bound + 1e-12,
            {"x_star_norm": x_star_norm, "bound": norm_bound},
        )
    )

    rng = derive_stream(seed, "certifier")
    worst_leak = 0.0
    for j in range(1, hq.T):
        x = np.zeros(hq.d)
        x[:j] = rng.normal(size=j)
        _, grad = adversaries.chain_value_grad(hq, x)
        worst_leak = max(worst_leak, float(np.max(np.abs(grad[j + 1 :]))))
    checks.append(
        CheckResult(
            "AC3",
            "gradient support grows by one coordinate per query (span induction)",
            worst_leak <= 1e-12,
            {"worst_leak": worst_leak},
        )
    )

    ok_lb = True
    lb_details = {}
    for name in ("subgrad", "steepest"):
        for T in (2, 5, 10):
            cfg = ExperimentConfig(
                experiment="quad_lower_bound", T=T, d=2 * T, seed=seed, solver={"name": name}
            )
            report = run_experiment(cfg)
            v = report.verdicts[0]
            ok_lb &= v.passed
            lb_details[f"{name}_T{T}"] = v.details["min_distance"]
    checks.append(
        CheckResult(
            "AC1",
            "bundled span solvers stay exp(-T) away from the minimizer",
            ok_lb,
            {"min_distances": lb_details},
        )
    )
    return checks


def verify_remark(seed: int) -> list[CheckResult]:
    """The clamped pure-channel example: flat hull at 0, distance bound 1/7."""
    delta = 0.05
    d = 2
    w = np.array([delta / 2.0, 0.0])
    gtilde = zoo.clamped_channel(w, drop=1.0)
    v = np.array([0.0, delta])
    checks = []

    g_plus = gtilde.eval(v).subgrad
    g_minus = gtilde.eval(-v).subgrad
    resid = float(np.linalg.norm(0.5 * (g_plus + g_minus)))
    checks.append(
        CheckResult(
            "AC8",
            "opposite stencil gradients cancel to 1e-12",
            resid <= 1e-12,
            {"residual": resid},
        )
    )

    cert = stationarity.certify_delta_eps(gtilde.eval, np.zeros(d), delta, 1e-12, [v, -v])
    checks.append(
        CheckResult(
            "AC8",
            "hull certificate at the origin has value <= 1e-12",
            cert.certified and cert.value <= 1e-12,
            {"value": cert.value},
        )
    )

    dist = stationarity.near_stationarity_distance_lb(gtilde, np.zeros(d))
    checks.append(
        CheckResult(
            "AC8",
            "value-gap distance bound at the origin >= 1/7 - 1e-9",
            dist.value >= 1.0 / 7.0 - 1e-9,
            {"distance_bound": dist.value},
        )
    )
    return checks


def run_verify(suite: str, seed: int) -> Report:
    if suite not in VERIFY_SUITES:
        raise ConfigError(f"unknown verify suite {suite!r}; choose from {VERIFY_SUITES}")
    start = time.perf_counter()
    suites = {
        "prop1": verify_prop1,
        "channel": verify_channel,
        "quadratic": verify_quadratic,
        "remark": verify_remark,
    }
    names = list(suites) if suite == "all" else [suite]
    verdicts: list[CheckResult] = []
    for name in names:
        verdicts.extend(suites[name](seed))
    return Report(
        kind=f"verify:{suite}",
        config={"suite": suite, "seed": seed},
        verdicts=verdicts,
        timing_seconds=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# figure grids
# ---------------------------------------------------------------------------

FIGURE_DEFAULTS = {
    "fig1": {"umin": -4.0, "umax": 4.0, "vmin": -4.0, "vmax": 4.0, "nu": 101, "nv": 101},
    "fig2": {"umin": -2.0, "umax": 2.0, "vmin": -2.0, "vmax": 2.0, "nu": 101, "nv": 101},
    "fig3": {"umin": -2.0, "umax": 2.0, "vmin": -2.0, "vmax": 2.0, "nu": 101, "nv": 101},
}


def figure_values(figure_id: str, points: np.ndarray) -> np.ndarray:
    if figure_id == "fig1":
        values, _, _ = zoo.Spiral(delta=1.0, extended=True).eval_batch(points)
    elif figure_id == "fig2":
        instance = zoo.ChannelInstance(w=np.array([0.3, 0.0]), clamp=-1.0)
        values, _, _, _ = instance.eval_batch(points)
    elif figure_id == "fig3":
        values, _, _ = zoo.Warga().eval_batch(points)
    else:
        raise ConfigError(f"unknown figure id {figure_id!r}")
    return values


def figure_csv(figure_id: str, grid: dict | None = None) -> str:
    if figure_id not in FIGURE_DEFAULTS:
        raise ConfigError(f"unknown figure id {figure_id!r}")
    spec = dict(FIGURE_DEFAULTS[figure_id])
    for key, val in (grid or {}).items():
        if key not in spec:
            raise ConfigError(f"unknown grid field {key!r}")
        spec[key] = val
    nu, nv = int(spec["nu"]), int(spec["nv"])
    if nu < 2 or nv < 2:
        raise ConfigError("grid needs at least 2 points per axis")
    us = np.linspace(spec["umin"], spec["umax"], nu)
    vs = np.linspace(spec["vmin"], spec["vmax"], nv)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    points = np.stack([uu.ravel(), vv.ravel()], axis=1)
    values = figure_values(figure_id, points)
    buf = io.StringIO()
    buf.write("u,v,value\n")
    for (u, v), val in zip(points, values):
        buf.write(f"{float(u)!r},{float(v)!r},{float(val)!r}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# certification entry (shared by the CLI)
# ---------------------------------------------------------------------------


def certify_point(
    function_doc: dict,
    point,
    notion: str,
    *,
    eps: float,
    delta: float | None = None,
    samples: int | None = None,
    stencil=None,
    seed: int = 12345,
) -> tuple[list[dict], bool]:
    """Certify a point of a serialized zoo function; returns (certs, answered).

    ``answered`` means the certificates settle the question at the requested
    level: a witness, or an analytic lower bound above eps (refutation).
    """
    instance = zoo.instance_from_json(function_doc)
    x = np.asarray(point, dtype=float)
    oracle = instance.eval
    if notion == "eps":
        cert = stationarity.certify_eps_stationary(oracle, x, eps)
        certs = [cert.to_json()]
        answered = cert.certified
        if not answered and isinstance(instance, zoo.ChannelInstance):
            try:
                bound = stationarity.subdiff_norm_lower_bound(instance, x)
            except Exception:
                bound = None
            if bound is not None:
                certs.append(bound.to_json())
                if bound.value > eps:
                    answered = True
        return certs, answered
    if notion == "delta_eps":
        if delta is None:
            raise ConfigError("delta_eps certification needs --delta")
        if stencil is not None:
            sampling = [np.asarray(o, dtype=float) for o in stencil]
            rng = None
        else:
            sampling = int(samples if samples is not None else 64)
            rng = derive_stream(seed, "certifier")
        cert = stationarity.certify_delta_eps(oracle, x, delta, eps, sampling, rng_state=rng)
        return [cert.to_json()], cert.certified
    raise ConfigError(f"unknown stationarity notion {notion!r}")


def build_adversary_files(cfg: ExperimentConfig) -> dict[str, str]:
    """Build a hard channel instance and render its persistence documents."""
    cfg.validate()
    streams = role_streams(cfg.seed)
    descriptor = cfg.build_solver()
    acfg = adversaries.ChannelAdversaryConfig(
        mode=cfg.adversary.get("mode", adversaries.MODE_DETERMINISTIC),
        w_norm=cfg.adversary.get("w_norm"),
    )
    instance, diag = adversaries.build_channel_instance(
        acfg, descriptor, cfg.T, cfg.d, rng_state=streams
    )
    transcript = diag.pop("transcript")
    diag["config"] = cfg.echo()
    return {
        "instance.json": zoo.instance_to_json_str(instance) + "\n",
        "diagnostics.json": json.dumps(diag, indent=2) + "\n",
        "transcript.jsonl": transcript.to_jsonl(),
    }
