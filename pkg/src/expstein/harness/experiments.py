"""Experiments: simulate a model, compute the requested bounds and the matching distances."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import bounds as B
from ..distributions import (Distribution, EmpiricalSample, Exponential, FinitePMF, Geometric,
                             PointMass, Uniform, from_literal, moments, normalized, scale)
from ..errors import (ConfigError, ExpSteinError, InsufficientInputs, InvalidParams,
                      UnsupportedFamily)
from ..metrics import DK, DW, METRICS, DistanceResult, distance_empirical, distance_exact
from ..rng import run_blocks, stream
from ..transforms import (NEITHER, classify_aging, equilibrium, index_equilibrium,
                          nbue_coupling_gap, sample_equilibrium)
from .config import ExperimentConfig, parse_config, set_path

ROW_FIELDS = ("experiment_id", "metric", "bound_value", "distance_value", "distance_method",
              "mc_halfwidth", "dominance_ok")
QUANTILE_GRID = 4001


@dataclass(frozen=True)
class VerificationRow:
    experiment_id: str
    metric: str
    bound_value: float
    distance_value: float
    distance_method: str
    mc_halfwidth: float | None
    dominance_ok: bool

    @classmethod
    def build(cls, eid, report: B.BoundReport, dist: DistanceResult) -> "VerificationRow":
        hw = dist.mc_halfwidth
        ok = dist.value <= report.value + 3.0 * (hw or 0.0)
        return cls(eid, report.metric, report.value, dist.value, dist.method, hw, bool(ok))

    def csv_cells(self):
        return [self.experiment_id, self.metric, repr(float(self.bound_value)),
                repr(float(self.distance_value)), self.distance_method,
                "" if self.mc_halfwidth is None else repr(float(self.mc_halfwidth)),
                "true" if self.dominance_ok else "false"]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    details: list  # one dict per row: bound report, distance, target
    sample: EmpiricalSample | None
    sample_columns: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.dominance_ok for r in self.rows)


# ---------------------------------------------------------------------------
# shared helpers


def _dist(model, key, default=None) -> Distribution:
    lit = model.get(key, default)
    if lit is None:
        raise ConfigError(f"model.{key} is required")
    try:
        return from_literal(lit)
    except ExpSteinError as exc:
        raise ConfigError(f"model.{key}: {exc}") from exc


def _is_bounded(d: Distribution) -> bool:
    return isinstance(d, (FinitePMF, Uniform))


def quantile_gap(x: Distribution, xe: Distribution, points: int = QUANTILE_GRID) -> float:
    """``sup_u |F_X^-1(u) - F_{X^e}^-1(u)|`` on a uniform ``u`` grid of ``[0, 1 - 1e-9]``."""
    u = np.linspace(0.0, 1.0 - 1e-9, points)
    return float(np.max(np.abs(np.asarray(x.quantile(u)) - np.asarray(xe.quantile(u)))))


def _pairs(reports, exact: dict, empirical: dict):
    """Match reports with distances by ``(target, metric)``."""
    out = []
    for r in reports:
        for source in (exact, empirical):
            d = source.get((r.target, r.metric))
            if d is not None:
                out.append((r, d))
    return out


def _exact_distances(law: Distribution | None, target: str, metrics=METRICS) -> dict:
    if law is None:
        return {}
    ref = Exponential(1.0)
    return {(target, m): distance_exact(law, ref, m) for m in metrics}


def _empirical_distances(sample: EmpiricalSample | None, target: str, seed: int, metrics=METRICS) -> dict:
    if sample is None:
        return {}
    ref = Exponential(1.0)
    return {(target, m): distance_empirical(sample, ref, m, seed=seed) for m in metrics}


def _merge(explicit: dict, derived: dict) -> dict:
    out = dict(derived)
    out.update(explicit)
    return out


# ---------------------------------------------------------------------------
# model kinds


class Model:
    kind = ""
    bound_ids: tuple = ()

    def __init__(self, cfg: ExperimentConfig, threads: int | None = None):
        self.cfg, self.threads = cfg, threads
        self.model = cfg.model
        for bid, _ in cfg.bound_requests:
            if bid not in self.bound_ids:
                raise ConfigError(f"bound {bid!r} is not available for model kind {self.kind!r}; "
                                  f"choose from {', '.join(self.bound_ids)}")

    def simulate(self) -> tuple[EmpiricalSample, dict]:
        raise NotImplementedError

    def verify(self, sample) -> tuple[list, dict]:
        raise NotImplementedError


class RandomSumModel(Model):
    """``W = mu^-1 sum_{i <= N} X_i`` with i.i.d. summands (or a cycled sequence / m-dependent blocks)."""

    kind = "random-sum"
    bound_ids = (B.RANDOM_SUM, B.RANDOM_SUM_NBUE)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        from ..simulators.sums import IID, IndependentSequence, MDependent
        m = self.model
        self.n = _dist(m, "n")
        if "x_sequence" in m:
            self.xs = [from_literal(d) for d in m["x_sequence"]]
            self.x_gen = IndependentSequence(tuple(self.xs))
            self.x = None
        elif "x_mdep" in m:
            spec = m["x_mdep"]
            self.x = None
            self.x_gen = MDependent(from_literal(spec["dist"]), int(spec.get("m", 1)))
        else:
            self.x = _dist(m, "x", {"family": "point-mass", "params": [1.0]})
            self.x_gen = IID(self.x)
        self.mu = m.get("mu")

    def simulate(self):
        from ..simulators.sums import simulate_random_sum
        s = simulate_random_sum(self.n, self.x_gen, self.cfg.reps, self.cfg.seed, self.mu,
                                threads=self.threads)
        return s, {}

    def _need_iid(self, bid):
        if self.x is None:
            raise InsufficientInputs(f"{bid}: derived inputs need i.i.d. summands; give them in [bounds.{bid}]")

    def _exact_law(self, mu):
        x, n = self.x, self.n
        if isinstance(x, PointMass):
            return scale(n, x.c / mu)
        if isinstance(x, Exponential) and isinstance(n, Geometric) and n.start == 1:
            return Exponential(1.0)
        return None

    def derived(self, bid):
        x, n = self.x, self.n
        mu = float(self.mu) if self.mu is not None else float(n.mean * x.mean)
        if bid == B.RANDOM_SUM:
            xe = equilibrium(x)
            if isinstance(n, Geometric) and n.start == 1 and abs(x.mean - 1.0) < 1e-12:
                # geometric counts with unit-mean summands: the index law equals the count law
                e_nm, K = 0.0, 0.0
            else:
                mlaw, _ = index_equilibrium(n)
                e_nm = distance_exact(n, mlaw, DW).value
                K = max(n.upper, mlaw.upper) - 1.0 if isinstance(n, FinitePMF) else None
            return dict(mu=mu, sup_mu_i=float(x.mean),
                        e_x_gap=distance_exact(x, xe, DW).value,
                        e_nm_gap=e_nm, quantile_gap=quantile_gap(x, xe),
                        C=float(x.upper) if _is_bounded(x) else None, K=K)
        if bid == B.RANDOM_SUM_NBUE:
            if abs(x.mean - 1.0) > 1e-12:
                raise InvalidParams("the NBUE random-sum bound needs summands with mean 1")
            if classify_aging(x, discrete=False).tag == NEITHER:
                raise InvalidParams("model.x is neither NBUE nor NWUE")
            if classify_aging(n).tag == NEITHER:
                raise InvalidParams("model.n is neither discrete NBUE nor discrete NWUE")
            m1, m2 = moments(x)
            n1, n2 = moments(n)
            return dict(mu=float(n1), sup_half_m2_gap=abs(m2 / 2.0 - 1.0), e_n2=float(n2))
        raise AssertionError(bid)

    def verify(self, sample):
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            if not explicit or set(explicit) != _REQUIRED.get(bid, set()):
                self._need_iid(bid)
                inputs = _merge(explicit, self.derived(bid))
            else:
                inputs = explicit
            if bid == B.RANDOM_SUM:
                if inputs.get("K") is None:
                    inputs = {k: v for k, v in inputs.items() if k != "quantile_gap"}
                reports += B.random_sum_bounds(**inputs)
            else:
                reports.append(B.random_sum_nbue_bound(**inputs))
        exact = {}
        if self.x is not None:
            mu = sample.extra["mu"]
            exact = _exact_distances(self._exact_law(mu), B.W)
        emp = _empirical_distances(sample, B.W, self.cfg.seed)
        return _pairs(reports, exact, emp), {}


_REQUIRED = {
    B.RANDOM_SUM: {"mu", "sup_mu_i", "e_x_gap", "e_nm_gap"},
    B.RANDOM_SUM_NBUE: {"mu", "sup_half_m2_gap", "e_n2"},
}


class NBUEModel(Model):
    """A single law ``W`` (normalised to mean one) compared with Exp(1)."""

    kind = "nbue"
    bound_ids = (B.NBUE, B.EQUILIBRIUM)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        d = _dist(self.model, "dist")
        self.w = normalized(d) if self.model.get("normalize", True) else d

    def simulate(self):
        w = self.w
        vals = run_blocks(lambda r, k: np.asarray(w.sample(r, k), dtype=float),
                          self.cfg.reps, self.cfg.seed, "nbue-law", self.threads)
        return EmpiricalSample(vals, seed=self.cfg.seed, stream="nbue-law"), {}

    def verify(self, sample):
        w = self.w
        cls = classify_aging(w, discrete=False)
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            if bid == B.NBUE:
                if cls.tag == NEITHER and "second_moment" not in explicit:
                    raise InvalidParams("law is neither NBUE nor NWUE")
                reports += B.nbue_bounds(**_merge(explicit, {"second_moment": moments(w)[1]}))
            else:
                derived = {} if explicit else {"e_abs_diff": nbue_coupling_gap(w)}
                reports += B.equilibrium_bounds(**_merge(explicit, derived))
        we = equilibrium(w)
        exact = {**_exact_distances(w, B.W), **_exact_distances(we, B.WE)}
        emp = _empirical_distances(sample, B.W, self.cfg.seed)
        try:
            vals = run_blocks(lambda r, k: np.asarray(sample_equilibrium(w, r, k), dtype=float),
                              self.cfg.reps, self.cfg.seed, "nbue-equilibrium", self.threads)
            emp.update(_empirical_distances(EmpiricalSample(vals, seed=self.cfg.seed), B.WE, self.cfg.seed))
        except UnsupportedFamily:
            pass
        return _pairs(reports, exact, emp), {"aging_class": cls.tag}


class PatternModel(Model):
    """Coin-flip pattern waiting times."""

    kind = "pattern"
    bound_ids = (B.PATTERN,)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        from ..simulators.patterns import overlaps_itself
        m = self.model
        self.p = float(m.get("p", 0.5))
        self.ptype = m.get("pattern_kind", "head-run")
        if self.ptype == "head-run":
            self.k = int(_require_key(m, "k"))
            self.word = "H" * self.k
            self.norm = (1 - self.p) * self.p ** self.k
        elif self.ptype == "non-overlapping":
            self.word = str(_require_key(m, "pattern"))
            self.k = len(self.word)
            if overlaps_itself(self.word):
                raise ConfigError(f"pattern {self.word!r} overlaps itself")
            self.norm = B.pattern_probability(self.word, self.p)
        else:
            raise ConfigError(f"unknown pattern_kind {self.ptype!r}")

    def simulate(self):
        from ..simulators.patterns import HEAD_RUN, START_OF_RUN, simulate_pattern_time
        if self.ptype == "head-run":
            s = simulate_pattern_time(self.p, None, HEAD_RUN, self.cfg.reps, self.cfg.seed,
                                      k=self.k, threads=self.threads)
            t = s.values
        else:
            s = simulate_pattern_time(self.p, self.word, START_OF_RUN, self.cfg.reps, self.cfg.seed,
                                      threads=self.threads)
            t = s.values - 1.0  # flips before the start of the first occurrence
        return EmpiricalSample(t * self.norm, seed=self.cfg.seed, stream=s.stream,
                               extra={"normalizer": self.norm}), {"flips_before_start": t}

    def verify(self, sample):
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            derived = {"p": self.p, "k": self.k, "kind": self.ptype}
            if self.ptype == "non-overlapping":
                derived["pi_i"] = self.norm
            reports.append(B.pattern_bounds(**_merge(explicit, derived)))
        emp = _empirical_distances(sample, B.W, self.cfg.seed, metrics=(DK,))
        return _pairs(reports, {}, emp), {}


def _require_key(m, key):
    if key not in m:
        raise ConfigError(f"model.{key} is required")
    return m[key]


class HittingTimeModel(Model):
    """Hitting time of a state from stationarity, scaled by its stationary probability."""

    kind = "hitting-time"
    bound_ids = (B.HITTING_TIME,)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        from ..simulators.markov import ChainSpec
        m = self.model
        try:
            self.chain = ChainSpec(np.asarray(_require_key(m, "P"), dtype=float), tuple(m.get("states", ())))
        except InvalidParams as exc:
            raise ConfigError(f"model.P: {exc}") from exc
        self.target = m.get("target", self.chain.states[-1])

    def simulate(self):
        from ..simulators.markov import simulate_hitting_times
        s = simulate_hitting_times(self.chain, self.target, self.cfg.reps, self.cfg.seed,
                                   normalized=True, threads=self.threads)
        return s, {}

    def verify(self, sample):
        from ..oracle import exact_hitting_pmf
        from ..simulators.markov import diagonal_deviation_sum, stationary_distribution
        pi_i = float(stationary_distribution(self.chain)[self.chain.index(self.target)])
        t_stat = exact_hitting_pmf(self.chain, self.target, "stationary")
        t_ret = exact_hitting_pmf(self.chain, self.target, self.target)
        law_stat, law_ret = t_stat.to_distribution(), t_ret.to_distribution()
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            explicit = dict(explicit)
            variants = explicit.pop("variants", ["mixing-sum", "renewal-gap", "mismatch-prob"])
            for v in variants:
                derived = {"pi_i": pi_i}
                if v == "mixing-sum" and "diag_sum" not in explicit:
                    derived["diag_sum"] = diagonal_deviation_sum(self.chain, self.target)
                elif v == "renewal-gap" and "e_abs_gap" not in explicit:
                    # comonotone coupling of the two hitting times
                    derived["e_abs_gap"] = distance_exact(law_stat, law_ret, DW).value
                elif v == "mismatch-prob" and "p_mismatch" not in explicit:
                    # maximal coupling
                    from ..oracle import total_variation
                    derived["p_mismatch"] = total_variation(t_stat, t_ret)
                reports.append(B.hitting_time_bounds(v, **_merge(explicit, derived)))
        exact = _exact_distances(scale(law_stat, pi_i), B.W, metrics=(DK,))
        emp = _empirical_distances(sample, B.W, self.cfg.seed, metrics=(DK,))
        return _pairs(reports, exact, emp), {"pi_target": pi_i}


class YaglomModel(Model):
    """Critical branching process conditioned on survival, via the spine construction."""

    kind = "gw-yaglom"
    bound_ids = (B.EQUILIBRIUM,)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        self.offspring = _dist(self.model, "offspring")
        self.n = int(_require_key(self.model, "n"))
        self._batch = None

    def batch(self):
        if self._batch is None:
            from ..simulators.branching import spine_samples
            self._batch = spine_samples(self.offspring, self.n, self.cfg.reps, self.cfg.seed, self.threads)
        return self._batch

    def simulate(self):
        b = self.batch()
        s = EmpiricalSample(b.R_n_star.astype(float), seed=self.cfg.seed, stream=f"spine-{self.n}")
        return s, {"value": b.R_n_star, "S_n": b.S_n, "L_n": b.L_n, "R_n": b.R_n}

    def verify(self, sample):
        from ..oracle import conditioned_law
        b = self.batch()
        law = conditioned_law(self.offspring, self.n)
        m = float(law.mean)
        w = b.R_n_star / m
        u = stream(self.cfg.seed, "spine-uniform").random(w.size)
        we = (b.R_n - u) / m
        diff = we - w
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            value, beta, p_exc = B.best_tail_bound(diff)
            derived = {"e_abs_diff": float(np.mean(np.abs(diff))), "beta": beta, "p_exceed": p_exc}
            reports += B.equilibrium_bounds(**_merge(explicit, derived))
        w_law = scale(law, 1.0 / m)
        exact = {**_exact_distances(w_law, B.W), **_exact_distances(equilibrium(w_law), B.WE)}
        emp = {**_empirical_distances(EmpiricalSample(w, seed=self.cfg.seed), B.W, self.cfg.seed),
               **_empirical_distances(EmpiricalSample(we, seed=self.cfg.seed), B.WE, self.cfg.seed)}
        return _pairs(reports, exact, emp), {"conditioned_mean": m}


class GeometricZeroSumModel(Model):
    """``W = mu^-1 sum_{i <= N} X_i`` with ``N`` geometric from 0, coupled through ``N' = N + 1``."""

    kind = "geometric-zero-sum"
    bound_ids = (B.STEIN_COUPLING, B.LOCAL_DEPENDENCE)

    def __init__(self, cfg, threads=None):
        super().__init__(cfg, threads)
        from ..simulators.sums import IID
        m = self.model
        self.p = float(_require_key(m, "p"))
        if not 0 < self.p < 1:
            raise ConfigError("model.p must lie in (0, 1)")
        self.x = _dist(m, "x", {"family": "point-mass", "params": [1.0]})
        self.x_gen = IID(self.x)
        self.m = int(m.get("m", 0))
        self.mu = (1.0 / self.p - 1.0) * float(self.x.mean)
        self._tuples = None

    def tuples(self):
        if self._tuples is None:
            from ..simulators.sums import geometric_coupling_tuples
            self._tuples = geometric_coupling_tuples(self.p, self.cfg.reps, self.cfg.seed, self.m,
                                                     self.x_gen, self.threads)
        return self._tuples

    def simulate(self):
        t = self.tuples()
        s = EmpiricalSample(t[:, 0], seed=self.cfg.seed, stream=f"stein-coupling-{self.m}")
        return s, {"value": t[:, 0], "w_prime": t[:, 1], "w_double_prime": t[:, 2], "g": t[:, 3]}

    def verify(self, sample):
        t = self.tuples()
        mu, g = self.mu, (1.0 - self.p) / self.p
        C = float(self.x.upper) if _is_bounded(self.x) else None
        reports = []
        for bid, explicit in self.cfg.bound_requests:
            explicit = dict(explicit)
            if bid == B.STEIN_COUPLING:
                th = {}
                if C is not None:
                    th = {"alpha": g, "beta": C / mu, "beta_p": C * self.m / mu}
                th.update({k: explicit.pop(k) for k in ("alpha", "beta", "beta_p") if k in explicit})
                r = B.estimate_r_terms(t, r1=explicit.pop("r1", 0.0), **th)
                reports += B.stein_coupling_bounds(r)
            else:
                if C is None and "C" not in explicit:
                    raise InsufficientInputs("local-dependence needs bounded summands (C)")
                fwd = mu * (t[:, 1] - t[:, 0])
                back = mu * (t[:, 0] - t[:, 2])
                derived = dict(p=self.p, mu=mu, s=0.0, C=C, K1=1.0, K2=float(self.m),
                               dw_terms={"e_forward_prod": float(np.mean(fwd * (1 + back))),
                                         "e_backward": float(np.mean(back))})
                reports += B.local_dependence_bounds(**_merge(explicit, derived))
        exact = {}
        if isinstance(self.x, PointMass):
            exact = _exact_distances(scale(Geometric(self.p, 0), self.x.c / mu), B.W)
        emp = _empirical_distances(sample, B.W, self.cfg.seed)
        return _pairs(reports, exact, emp), {"mu": mu}


MODELS = {c.kind: c for c in (RandomSumModel, NBUEModel, PatternModel, HittingTimeModel,
                              YaglomModel, GeometricZeroSumModel)}


# ---------------------------------------------------------------------------
# running and reporting


def build_model(cfg: ExperimentConfig, threads: int | None = None) -> Model:
    if cfg.kind not in MODELS:
        raise ConfigError(f"unknown model kind {cfg.kind!r}; choose from {', '.join(MODELS)}")
    return MODELS[cfg.kind](cfg, threads)


def _context(cfg, exc):
    exc.args = (f"[{cfg.experiment_id}] {exc.args[0] if exc.args else exc}",) + exc.args[1:]
    return exc


def simulate_only(cfg: ExperimentConfig, threads: int | None = None):
    try:
        model = build_model(cfg, threads)
        return model.simulate()
    except ExpSteinError as exc:
        raise _context(cfg, exc)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    """Simulate, then compute every requested bound and pair it with oracle and empirical distances."""
    try:
        model = build_model(cfg, threads)
        sample, columns = model.simulate()
        rows, details, info = [], [], {}
        if cfg.bound_requests:
            pairs, info = model.verify(sample)
            for rep, dist in pairs:
                rows.append(VerificationRow.build(cfg.experiment_id, rep, dist))
                details.append({"target": rep.target, "bound": rep.as_dict(), "distance": asdict(dist)})
    except ExpSteinError as exc:
        raise _context(cfg, exc)
    return ExperimentResult(cfg, rows, details, sample, columns, info)


def rows_csv(rows, prefix_fields=(), prefix_values=None, suffix=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(prefix_fields) + list(ROW_FIELDS) + list(suffix[0] if suffix else []))
    for i, r in enumerate(rows):
        pre = list(prefix_values[i]) if prefix_values else []
        post = list(suffix[1][i]) if suffix else []
        w.writerow(pre + r.csv_cells() + post)
    return buf.getvalue()


def samples_csv(sample: EmpiricalSample, columns: dict) -> str:
    """``replicate,value[,extra...]``.

    Models with per-replicate extra columns pass ``value`` in draw order among
    ``columns``; otherwise the sorted sample values are written.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [k for k in columns if k != "value"]
    w.writerow(["replicate", "value"] + names)
    vals = np.asarray(columns["value"]) if "value" in columns else sample.values
    cols = [np.asarray(columns[k]) for k in names]
    for i, v in enumerate(vals):
        w.writerow([i, repr(float(v))] + [repr(c[i].item()) for c in cols])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def report_json(result: ExperimentResult) -> str:
    doc = {
        "experiment_id": result.config.experiment_id,
        "config": result.config.raw,
        "all_dominate": result.ok,
        "info": result.info,
        "rows": [{**{k: getattr(r, k) for k in ROW_FIELDS}, **d} for r, d in zip(result.rows, result.details)],
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_outputs(result: ExperimentResult, path) -> list[Path]:
    """Write the verification CSV at ``path``, the JSON report and the samples CSV beside it.

    With no bound requests only the samples CSV is written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples = path.with_name(path.stem + ".samples.csv")
    written = []
    if result.sample is not None:
        samples.write_text(samples_csv(result.sample, result.sample_columns))
        written.append(samples)
    if result.config.bound_requests:
        path.write_text(rows_csv(result.rows))
        js = path.with_suffix(".json")
        js.write_text(report_json(result))
        written += [path, js]
    return written


# ---------------------------------------------------------------------------
# sweeps


def _loglog(x, y):
    from ..simulators.branching import _loglog_slope
    return _loglog_slope(x, y)


@dataclass
class SweepResult:
    parameter: str
    values: list
    results: list
    slopes: dict  # (target, metric, method) -> (slope, se); empty unless a rate sweep

    @property
    def ok(self):
        return all(r.ok for r in self.results)

    def csv(self) -> str:
        rows, pre, post = [], [], []
        for v, res in zip(self.values, self.results):
            for r, d in zip(res.rows, res.details):
                rows.append(r)
                pre.append([v])
                if self.slopes:
                    key = (d["target"], r.metric, r.distance_method)
                    s, se = self.slopes.get(key, (float("nan"),) * 2)
                    post.append([repr(s), repr(se)])
        suffix = (("loglog_slope", "slope_se"), post) if self.slopes else None
        return rows_csv(rows, (self.parameter,), pre, suffix)


def sweep(cfg: ExperimentConfig, parameter: str, values, threads: int | None = None,
          rate: bool | None = None) -> SweepResult:
    """Run the experiment once per parameter value (dotted path such as ``model.n``)."""
    results = []
    for v in values:
        doc = set_path(cfg.raw, parameter, v)
        results.append(run_experiment(parse_config(doc), threads))
    if rate is None:
        rate = cfg.kind == "gw-yaglom" and parameter == "model.n"
    slopes = {}
    if rate and len(values) >= 2:
        groups = {}
        for v, res in zip(values, results):
            seen = set()
            for r, d in zip(res.rows, res.details):
                key = (d["target"], r.metric, r.distance_method)
                if key not in seen:  # the same distance is repeated once per bound formula
                    seen.add(key)
                    groups.setdefault(key, []).append((float(v), r.distance_value))
        for key, pts in groups.items():
            xs, ys = zip(*pts)
            if len(set(xs)) >= 2 and all(y > 0 for y in ys):
                slopes[key] = _loglog(xs, ys)
    return SweepResult(parameter, list(values), results, slopes)
