"""
Exponential-decay certificates: hypothesis audits, the bound |x(t)| <= K0 e_lambda(t, t0)
checked along a simulated trajectory, and parameter sweeps over problem families.
"""
import asyncio
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
import numpy as np
import pandas as pd
from .base import (
    Certificate,
    Form,
    GridPolicy,
    PointKind,
    Report,
    RhsForm,
    RootField,
    Verdict,
)
from .exceptions import (
    CertifyError,
    ExponentialError,
    NonpositiveTail,
    RootError,
    SimulationError,
    TimeScaleError,
    WindowMismatch,
)
from .halanay import S_FLOOR, char_at_zero, root_field, root_grid
from .simulate import field_log_increment, forcing, simulate
from .timescale import mu_tilde

logger = logging.getLogger(__name__)

TOL_ABS = 1e-9
PERSIST = 3
EPS_K = 0.01
VOC_RTOL_SCATTERED = 1e-9
VOC_RTOL_DENSE = 1e-5


def audit_conditions(problem, t_grid, rhs=None, samples=200, seed=42):
    """
    Evaluate the sign conditions a Halanay problem needs at every grid time.
    With a right-hand side, 1 - mu~ p must be strictly positive and custom
    forcings are spot-checked against the growth bound they declare.
    """
    report = Report("hypotheses", seed=seed)
    strict = rhs is not None
    name = "1 - mu~ p > 0" if strict else "1 - mu~ p >= 0"
    for t in t_grid:
        p = problem.p(t)
        m = mu_tilde(problem.ts, t, problem.window_start)
        value = 1 - m * p
        report.check(name).record(value > 0 if strict else value >= 0, margin=value, witness=t)

        qs = [q(t) for q in problem.q]
        if problem.form is Form.SumPower:
            report.check("q_i >= 0").record(min(qs[:-1], default=0.0) >= 0,
                                            margin=min(qs[:-1], default=0.0), witness=t)
            report.check("q_r > 0").record(qs[-1] > 0, margin=qs[-1], witness=t)
            report.check("p - sum q > 0").record(p - sum(qs) > 0, margin=p - sum(qs), witness=t)
        elif problem.form.uses_sup():
            gap = min(p - qs[0], qs[0])
            report.check("p > q > 0").record(gap > 0, margin=gap, witness=t)
        else:
            report.check("beta_i > 0").record(min(qs) > 0, margin=min(qs), witness=t)
            gap = p - math.prod(qs)
            report.check("p - prod beta > 0").record(gap > 0, margin=gap, witness=t)

        try:
            zero = char_at_zero(problem, t)
        except (ExponentialError, TimeScaleError) as e:
            report.check("P(t, 0) > 0").record(False, witness=t, detail=str(e))
        else:
            report.check("P(t, 0) > 0").record(zero > 0, margin=zero, witness=t)

    if rhs is not None and rhs.form is RhsForm.Custom:
        _audit_growth(report, problem, rhs, t_grid, samples, seed)
    for c in report.failures():
        logger.info("hypothesis %r fails at t=%r (margin %g)", c.name, c.witness, c.worst_margin)
    return report


def _audit_growth(report, problem, rhs, t_grid, samples, seed):
    rng = np.random.default_rng(seed)
    lo, hi = rhs.state_range
    check = report.check("growth bound")
    r = problem.spec.r
    for _ in range(samples):
        t = t_grid[rng.integers(len(t_grid))]
        z = rng.uniform(lo, hi, r + 1)
        value = abs(rhs.forcing(t, z[0], list(z[1:])))
        if rhs.dominated_by is Form.ProductForm:
            bound = math.prod(q(t) * abs(v) ** a for q, v, a in zip(rhs.q, z, rhs.alpha))
        else:
            bound = sum(q(t) * abs(v) ** rhs.ell for q, v in zip(rhs.q, z))
        check.record(value <= bound + 1e-12, margin=bound - value, witness=(t, tuple(z)))


def choose_K0(history, problem, eps_K=EPS_K, policy=None):
    """ (1 + eps_K) max(1, sup |phi|) over the initial window """
    top = history.sup(problem.ts, problem.window_start, problem.t0, policy)
    return (1 + eps_K) * max(1.0, top)


def bound_path(traj, field, K0):
    """ K0 e_lambda(t, t0) at every trajectory sample with t >= t0 """
    out = []
    log_e = 0.0
    previous = None
    for t, m, kind in zip(traj.times, traj.mus, traj.kinds):
        if t < traj.t0 - 1e-12 * max(1.0, abs(traj.t0)):
            continue
        if previous is not None:
            a, step = previous
            log_e += field_log_increment(field, a, t, step)
        out.append((t, K0 * math.exp(log_e)))
        previous = (t, m if kind is PointKind.Scattered else 0.0)
    return out


def verify_bound(traj, field, K0, tol_abs=TOL_ABS, persist=PERSIST):
    """
    Check |x(t)| <= K0 e_lambda(t, t0) on [t0, end].  A violation at a dense
    sample is tolerated and logged unless it lasts persist consecutive samples;
    a violation at a right-scattered point is final.
    """
    if not field.grid:
        raise WindowMismatch("root field is empty")
    if abs(field.grid[0] - traj.t0) > 1e-9 * max(1.0, abs(traj.t0)):
        raise WindowMismatch(f"root field starts at {field.grid[0]}, trajectory at {traj.t0}")
    values = dict(zip(traj.times, zip(traj.values, traj.kinds)))
    margin = math.inf
    violated_at = None
    tolerated, run = [], []
    for t, bound in bound_path(traj, field, K0):
        x, kind = values[t]
        gap = bound - abs(x)
        margin = min(margin, gap)
        if gap >= -tol_abs:
            run = []
            continue
        if kind is PointKind.Scattered:
            violated_at = t
            break
        run.append(t)
        if len(run) >= persist:
            violated_at = run[0]
            break
        logger.debug("tolerating bound excursion %g at dense sample %g", gap, t)
        tolerated.append(t)
    verdict = Verdict.Certified if violated_at is None else Verdict.Violated
    if violated_at is not None:
        logger.warning("bound violated at t=%g", violated_at)
    try:
        decay = decay_rate(traj)
    except NonpositiveTail:
        decay = None
    return Certificate(
        verdict,
        K0,
        field,
        margin,
        (traj.t0, traj.times[-1]),
        violated_at=violated_at,
        decay_estimate=decay,
        tolerated=tolerated,
    )


def decay_rate(traj, window_fraction=0.5):
    """ least-squares slope of log x(t) over the trailing window_fraction of [t0, end] """
    end = traj.times[-1]
    start = end - window_fraction * (end - traj.t0)
    tail = [(t, x) for t, x in zip(traj.times, traj.values) if t >= start]
    if len(tail) < 2:
        raise NonpositiveTail("need at least two samples in the tail")
    ts, xs = np.array(tail).T
    if np.any(xs <= 0):
        raise NonpositiveTail("trajectory is not positive over the fitted tail")
    slope, _ = np.polyfit(ts, np.log(xs), 1)
    return float(slope)


def _window_sup(traj):
    def sup_over(a, b):
        values = [x for _, x in traj.slice(a, b)]
        return max(values + [traj.value_at(a)])
    return sup_over


def variation_of_constants(traj, rhs, spec):
    """
    Rebuild x(t) = E(t) [x(t0) + int F(s) / E(sigma s) delta s] with
    E = e_(-p)(., t0) along the trajectory samples and compare with the simulation.
    """
    report = Report("variation of constants")
    strict = report.check("1 - mu p > 0")
    check = report.check("reconstruction")
    sup_over = _window_sup(traj)
    start = traj.times.index(traj.t0) if traj.t0 in traj.times else 0
    times, values = traj.times[start:], traj.values[start:]
    kinds, mus = traj.kinds[start:], traj.mus[start:]
    scale = max(1.0, max(abs(x) for x in values))
    log_E, integral = 0.0, 0.0
    dense_seen = False
    for i, (t, x) in enumerate(zip(times, values)):
        if i:
            a, step = times[i - 1], mus[i - 1] if kinds[i - 1] is PointKind.Scattered else 0.0
            F_a = forcing(rhs, spec, a, values[i - 1], traj.value_at, sup_over)
            if step > 0:
                z = 1 - step * rhs.p(a)
                strict.record(z > 0, margin=z, witness=a)
                if z <= 0:
                    break
                log_next = log_E + math.log(z)
                integral += step * F_a * math.exp(-log_next)
                log_E = log_next
            else:
                dense_seen = True
                h = t - a
                log_next = log_E - 0.5 * h * (rhs.p(a) + rhs.p(t))
                F_t = forcing(rhs, spec, t, x, traj.value_at, sup_over)
                g_a = F_a * math.exp(-log_E)
                g_t = F_t * math.exp(-log_next)
                integral += 0.5 * h * (g_a + g_t)
                log_E = log_next
        rebuilt = math.exp(log_E) * (values[0] + integral)
        rtol = VOC_RTOL_DENSE if dense_seen else VOC_RTOL_SCATTERED
        gap = abs(rebuilt - x)
        check.record(gap <= rtol * scale, margin=-gap, witness=t, detail=f"{rebuilt} != {x}")
    return report


def certify(problem, rhs, history, T_end, policy=None, root_step=0.1, tol=1e-10,
            rate="envelope", eps_K=EPS_K, floor=S_FLOOR, field=None, seed=42):
    """
    Audit, compute the root field, simulate and verify the bound.  Returns
    (certificate, trajectory).  With rate="envelope" the bound uses the largest
    root over the horizon as a constant rate; rate="pointwise" uses the field.
    """
    policy = policy or GridPolicy()
    grid = root_grid(problem, T_end, root_step)
    audit = audit_conditions(problem, grid, rhs, seed=seed)
    if field is None and audit.passed:
        field = root_field(problem, grid, tol, floor)
    if not audit.passed or field.partial:
        failed = [c.name for c in audit.failures()]
        if field is not None and field.partial:
            failed.append("root field")
        logger.warning("hypotheses failed: %s", ", ".join(failed))
        empty = field if field is not None else RootField(tol=tol)
        cert = Certificate(Verdict.HypothesisFailed, math.nan, empty, math.nan,
                           (problem.t0, T_end), failed_hypotheses=failed, rate_mode=rate)
        return cert, None
    traj = simulate(problem.ts, problem.spec, rhs, history, T_end, policy)
    K0 = choose_K0(history, problem, eps_K, policy)
    if problem.ell < 1:
        K0 = max(K0, problem.Kconst)
    bound_field = field.envelope() if rate == "envelope" else field
    cert = verify_bound(traj, bound_field, K0)
    cert.root_field = field
    cert.rate_mode = rate
    return cert, traj


def _evaluate_cell(template, params, history, horizon, policy, root_step, tol):
    row = dict(params)
    try:
        problem, rhs = template(**params)
        cert, _ = certify(problem, rhs, history, horizon, policy, root_step, tol)
    except (ValueError, TimeScaleError, RootError, SimulationError, CertifyError,
            ExponentialError) as e:
        row.update(verdict="Error", rate=math.nan, margin=math.nan, error=str(e))
        return row
    lambdas = cert.root_field.lambdas
    row.update(
        verdict=cert.verdict.name,
        rate=max(lambdas) if lambdas else math.nan,
        margin=cert.margin,
        error="",
    )
    return row


async def sweep(template, grid, history, horizon, policy=None, root_step=0.1, tol=1e-10,
                workers=4):
    """
    Certify template(**params) for every combination of the grid's values.
    grid maps parameter name to its values; rows come back in grid order.
    """
    names = list(grid)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*grid.values())]
    loop = asyncio.get_event_loop()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = await asyncio.gather(
            *[loop.run_in_executor(pool, _evaluate_cell, template, cell, history, horizon,
                                   policy, root_step, tol)
              for cell in cells]
        )
    logger.info("swept %d cells", len(rows))
    return pd.DataFrame(rows, columns=names + ["verdict", "rate", "margin", "error"])


VERDICT_CODES = {"Certified": 0, "Violated": 1, "HypothesisFailed": 2, "Error": 3}


def region_heatmap(frame, x, y, path):
    """ static SVG of the verdict per (x, y) cell of a sweep table """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import ListedColormap

    plt.rcParams["svg.hashsalt"] = "tscale"
    codes = frame.assign(code=frame["verdict"].map(VERDICT_CODES))
    table = codes.pivot_table(index=y, columns=x, values="code", aggfunc="max")
    cmap = ListedColormap(["#2b8cbe", "#e34a33", "#fdbb84", "#bdbdbd"])
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(table.columns.values, table.index.values, table.values,
                         cmap=cmap, vmin=-0.5, vmax=3.5, shading="nearest")
    bar = fig.colorbar(mesh, ax=ax, ticks=list(VERDICT_CODES.values()))
    bar.ax.set_yticklabels(list(VERDICT_CODES))
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title("certified region")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
