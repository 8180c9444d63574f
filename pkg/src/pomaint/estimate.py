"""Maximum-likelihood estimation of (Q, P family, B) from observed trajectories.

The observable chain's kernel Q has a closed-form MLE (transition counting),
decoupled from the rest of the likelihood. The hidden kernels P[j] and the
emission matrix B are estimated by EM: the E-step runs a scaled
forward-backward pass per trajectory with the transition matrix at step k
selected by the observed covariate x1[k-1]; the M-step is ratio-of-expected-
counts, restricted to the covariate's occupation epochs.

Multiple independent trajectories are essential here: the hidden chain
absorbs in its failure state, so any single path carries each irreversible
transition at most once.

Structural zeros: rows of the initial parameter matrices that put all mass
on their own index (absorbing rows) are frozen, never re-estimated. Rows
whose posterior occupation mass is zero keep their previous values and are
flagged (repairing them to uniform would inject mass into transitions the
model class rules out).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .model import SystemModel
from .simulate import Trajectory, TrajectorySet


class ZeroLikelihoodError(ValueError):
    """A trajectory step has probability zero under the current parameters."""

    def __init__(self, trajectory: int | None, epoch: int):
        where = f"epoch {epoch}" if trajectory is None else f"trajectory {trajectory}, epoch {epoch}"
        super().__init__(f"zero-likelihood step at {where}")
        self.trajectory = trajectory
        self.epoch = epoch


@dataclass(frozen=True)
class Posteriors:
    """E-step output over a trajectory set.

    phi[t, k] is the posterior distribution of the hidden state at epoch k
    (phi[t, 0] is the known degenerate start); xi[t, k-1] the posterior over
    hidden transitions (k-1 -> k), k = 1..n. ``logliks`` are per-trajectory
    observed-data log-likelihoods, ``loglik`` their sum.
    """

    phi: np.ndarray   # (T, n+1, d)
    xi: np.ndarray    # (T, n, d, d)
    logliks: np.ndarray
    loglik: float


@dataclass(frozen=True)
class FitResult:
    theta_hat: SystemModel
    loglik_trace: np.ndarray
    iterations: int
    converged: bool
    q_flags: tuple
    flags: tuple


@dataclass(frozen=True)
class MultiStartResult:
    """Across-restart summary: per-entry mean/sd plus the best-likelihood fit."""

    best: FitResult
    P_mean: np.ndarray
    P_sd: np.ndarray
    B_mean: np.ndarray
    B_sd: np.ndarray
    Q: np.ndarray
    final_logliks: np.ndarray
    restarts: int
    fits: tuple = ()


def estimate_q_matrix(data: TrajectorySet, n_states: int | None = None
                      ) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Closed-form MLE of the observable kernel by transition counting.

    Returns (Q_hat, count_table, flags). States never visited as a source get
    an identity row and a flag instead of an undefined one.
    """
    if data.T < 1:
        raise ValueError("empty trajectory set")
    J = int(data.x1.max()) + 1 if n_states is None else n_states
    counts = np.zeros((J, J))
    np.add.at(counts, (data.x1[:, :-1].ravel(), data.x1[:, 1:].ravel()), 1.0)
    visits = counts.sum(axis=1)
    Q = np.eye(J)
    flags = []
    for j in range(J):
        if visits[j] > 0:
            Q[j] = counts[j] / visits[j]
        else:
            flags.append(f"Q row {j}: never visited as a source state, left as identity")
    return Q, counts, tuple(flags)


def _forward_backward_arrays(P: np.ndarray, B: np.ndarray, x1: np.ndarray,
                             z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled forward-backward over stacked trajectories.

    x1: (T, n+1) covariate paths, z: (T, n) signals. Returns (phi, xi,
    logliks). Scaling: the forward pass normalizes each step and accumulates
    log normalizers; the backward pass divides by the same constants, so
    posteriors come out normalized and log L = sum of log normalizers.
    """
    T, n = z.shape
    d = P.shape[1]
    alpha = np.empty((T, n, d))
    scale = np.empty((T, n))
    for k in range(1, n + 1):
        Pk = P[x1[:, k - 1]]                       # (T, d, d)
        emit = B[:, z[:, k - 1]].T                 # (T, d)
        if k == 1:
            a = Pk[:, 0, :] * emit
        else:
            a = np.einsum("ti,tij->tj", alpha[:, k - 2], Pk) * emit
        c = a.sum(axis=1)
        dead = np.nonzero(c <= 0.0)[0]
        if dead.size:
            raise ZeroLikelihoodError(int(dead[0]), k)
        alpha[:, k - 1] = a / c[:, None]
        scale[:, k - 1] = c
    logliks = np.log(scale).sum(axis=1)

    beta = np.empty((T, n, d))
    beta[:, n - 1] = 1.0
    for k in range(n - 1, 0, -1):
        Pk = P[x1[:, k]]
        emit = B[:, z[:, k]].T
        beta[:, k - 1] = np.einsum("tij,tj->ti", Pk, emit * beta[:, k]) / scale[:, k][:, None]

    phi = np.empty((T, n + 1, d))
    phi[:, 0] = 0.0
    phi[:, 0, 0] = 1.0
    phi[:, 1:] = alpha * beta
    xi = np.empty((T, n, d, d))
    for k in range(1, n + 1):
        Pk = P[x1[:, k - 1]]
        emit = B[:, z[:, k - 1]].T
        a_prev = phi[:, 0] if k == 1 else alpha[:, k - 2]
        xi[:, k - 1] = (a_prev[:, :, None] * Pk * (emit * beta[:, k - 1])[:, None, :]
                        / scale[:, k - 1][:, None, None])
    return phi, xi, logliks


def forward_backward(theta: SystemModel, traj: Trajectory
                     ) -> tuple[np.ndarray, np.ndarray, float]:
    """Posteriors and log-likelihood of one trajectory under theta.

    Returns (phi, xi, loglik): phi has shape (n+1, d) with the degenerate
    epoch-0 row first, xi has shape (n, d, d).
    """
    if traj.x1.max() > theta.L1 or traj.z.max() > theta.M:
        raise ValueError("trajectory states outside the model's spaces")
    try:
        phi, xi, ll = _forward_backward_arrays(theta.P, theta.B,
                                               traj.x1[None, :], traj.z[None, :])
    except ZeroLikelihoodError as err:
        raise ZeroLikelihoodError(None, err.epoch) from None
    return phi[0], xi[0], float(ll[0])


def posteriors(theta: SystemModel, data: TrajectorySet) -> Posteriors:
    """E-step over a whole trajectory set."""
    phi, xi, lls = _forward_backward_arrays(theta.P, theta.B, data.x1, data.z)
    return Posteriors(phi=phi, xi=xi, logliks=lls, loglik=float(lls.sum()))


def frozen_rows(theta: SystemModel, freeze_absorbing_emissions: bool = False
                ) -> tuple[np.ndarray, np.ndarray]:
    """Masks of (P, B) rows excluded from re-estimation.

    A row is structurally frozen when the initial parameters put all its mass
    on its own index (absorbing rows of P; degenerate self-signal rows of B).
    With ``freeze_absorbing_emissions``, the emission row of any hidden state
    that is absorbing under every kernel is additionally pinned at its
    initial value — the treatment that regards a failed component's signal
    signature as part of the sensor specification rather than a free
    parameter.
    """
    d = theta.n_s2
    frozen_P = np.zeros((theta.n_s1, d), dtype=bool)
    for j in range(theta.n_s1):
        for i in range(d):
            frozen_P[j, i] = theta.P[j, i, i] == 1.0
    frozen_B = np.zeros(d, dtype=bool)
    for i in range(min(d, theta.n_signals)):
        frozen_B[i] = theta.B[i, i] == 1.0
    if freeze_absorbing_emissions:
        frozen_B |= frozen_P.all(axis=0)
    return frozen_P, frozen_B


def m_step(post: Posteriors, data: TrajectorySet, theta_prev: SystemModel,
           frozen: tuple[np.ndarray, np.ndarray] | None = None
           ) -> tuple[SystemModel, tuple]:
    """Ratio-of-expected-counts update of P[j] and B (Q is untouched).

    P[j](i, .) is re-estimated from transition posteriors restricted to
    epochs whose covariate was j; B(i, .) from marginal posteriors grouped by
    emitted signal. Frozen rows are copied from the previous parameters; rows
    with zero posterior mass keep their previous values and are flagged.
    """
    J, d, Z = theta_prev.n_s1, theta_prev.n_s2, theta_prev.n_signals
    frozen_P, frozen_B = frozen if frozen is not None else frozen_rows(theta_prev)
    p_num = np.zeros((J, d, d))
    p_den = np.zeros((J, d))
    src = data.x1[:, :-1]  # covariate at k-1 for k = 1..n
    np.add.at(p_num, src.ravel(), post.xi.reshape(-1, d, d))
    np.add.at(p_den, src.ravel(), post.phi[:, :-1].reshape(-1, d))

    b_num_by_z = np.zeros((Z, d))
    np.add.at(b_num_by_z, data.z.ravel(), post.phi[:, 1:].reshape(-1, d))
    b_num = b_num_by_z.T  # (d, Z)
    b_den = post.phi[:, 1:].reshape(-1, d).sum(axis=0)

    flags = []
    P_new = np.array(theta_prev.P)
    for j in range(J):
        for i in range(d):
            if frozen_P[j, i]:
                continue
            if p_den[j, i] > 0.0:
                P_new[j, i] = p_num[j, i] / p_den[j, i]
            else:
                flags.append(f"P[{j}] row {i}: zero posterior mass, kept previous values")
    B_new = np.array(theta_prev.B)
    for i in range(d):
        if frozen_B[i]:
            continue
        if b_den[i] > 0.0:
            B_new[i] = b_num[i] / b_den[i]
        else:
            flags.append(f"B row {i}: zero posterior mass, kept previous values")
    return theta_prev.replace(P=P_new, B=B_new), tuple(flags)


def fit(data: TrajectorySet, init: SystemModel, max_iter: int = 30,
        tol: float = 1e-6, freeze_absorbing_emissions: bool = False) -> FitResult:
    """EM for (P family, B) with Q replaced by its closed-form count MLE.

    Stops after ``max_iter`` M-steps or when the log-likelihood improvement
    drops below ``tol``. The returned trace holds the log-likelihood of every
    visited parameter point including the final one, and is non-decreasing
    (EM ascent), which the test suite asserts on every fit.
    """
    Q_hat, _, q_flags = estimate_q_matrix(data, n_states=init.n_s1)
    theta = init.replace(Q=Q_hat)
    frozen = frozen_rows(init, freeze_absorbing_emissions)
    trace = []
    flags: list[str] = []
    converged = False
    iterations = 0
    for _ in range(max_iter):
        post = posteriors(theta, data)
        trace.append(post.loglik)
        if len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            converged = True
            break
        theta, step_flags = m_step(post, data, theta, frozen)
        flags.extend(step_flags)
        iterations += 1
    if not converged:
        trace.append(posteriors(theta, data).loglik)
    return FitResult(theta_hat=theta, loglik_trace=np.asarray(trace),
                     iterations=iterations, converged=converged,
                     q_flags=q_flags, flags=tuple(dict.fromkeys(flags)))


def random_theta(template: SystemModel, rng: np.random.Generator,
                 freeze_absorbing_emissions: bool = False) -> SystemModel:
    """Random initial parameters respecting the template's frozen structure.

    Non-frozen rows are drawn uniformly on the simplex (normalized
    exponentials); frozen rows and Q are copied from the template (Q is
    replaced by its count MLE inside ``fit`` anyway).
    """
    frozen_P, frozen_B = frozen_rows(template, freeze_absorbing_emissions)
    P = np.array(template.P)
    B = np.array(template.B)
    for j in range(template.n_s1):
        for i in range(template.n_s2):
            if not frozen_P[j, i]:
                e = rng.exponential(size=template.n_s2)
                P[j, i] = e / e.sum()
    for i in range(template.n_s2):
        if not frozen_B[i]:
            e = rng.exponential(size=template.n_signals)
            B[i] = e / e.sum()
    return template.replace(P=P, B=B)


def multi_start_fit(data: TrajectorySet, template: SystemModel, restarts: int,
                    seed: int, max_iter: int = 30, tol: float = 1e-6,
                    freeze_absorbing_emissions: bool = False) -> MultiStartResult:
    """Repeat ``fit`` from random initializations; report per-entry mean/sd.

    Q is identical across restarts by construction (closed-form MLE of the
    observed chain); the best fit is the one with the highest final
    log-likelihood.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    fits = []
    for stream in streams:
        init = random_theta(template, np.random.default_rng(stream),
                            freeze_absorbing_emissions)
        fits.append(fit(data, init, max_iter=max_iter, tol=tol,
                        freeze_absorbing_emissions=freeze_absorbing_emissions))
    P_stack = np.stack([f.theta_hat.P for f in fits])
    B_stack = np.stack([f.theta_hat.B for f in fits])
    finals = np.asarray([f.loglik_trace[-1] for f in fits])
    best = fits[int(np.argmax(finals))]
    return MultiStartResult(
        best=best,
        P_mean=P_stack.mean(axis=0), P_sd=P_stack.std(axis=0, ddof=0),
        B_mean=B_stack.mean(axis=0), B_sd=B_stack.std(axis=0, ddof=0),
        Q=np.array(best.theta_hat.Q),
        final_logliks=finals, restarts=restarts, fits=tuple(fits))


def default_template(L1: int, L2: int, M: int) -> SystemModel:
    """Model-class template: hidden failure state absorbing, everything else free.

    Used when no structural prior is supplied (CLI fits): the hidden chain's
    failure row is a frozen unit row; all other rows start uniform.
    """
    d, Z = L2 + 1, M + 1
    J = L1 + 1
    P = np.full((J, d, d), 1.0 / d)
    for j in range(J):
        P[j, L2] = 0.0
        P[j, L2, L2] = 1.0
    B = np.full((d, Z), 1.0 / Z)
    Q = np.eye(J)
    return SystemModel(L1=L1, L2=L2, M=M, Q=Q, P=P, B=B)


def parameter_count(L1: int, L2: int, M: int) -> dict:
    """Free-parameter count of the model class, with a note on the emission term.

    Row-stochastic matrices have (columns - 1) free entries per row, so B
    contributes (L2+1)*M; some references count (L2+1)*(M-1) instead. Both
    figures are reported.
    """
    q = (L1 + 1) * L1
    p = (L1 + 1) * (L2 + 1) * L2
    b = (L2 + 1) * M
    return {
        "Q": q, "P": p, "B": b, "total": q + p + b,
        "note": f"B counted as (L2+1)*M = {b} free entries; "
                f"the (L2+1)*(M-1) = {(L2 + 1) * (M - 1)} convention differs when M >= 1",
    }


class CovariateHMM(BaseEstimator):
    """Hidden Markov chain estimator with covariate-selected transition kernels.

    scikit-learn style wrapper around :func:`fit` / :func:`multi_start_fit`:
    ``fit(X)`` takes a :class:`~pomaint.simulate.TrajectorySet` and exposes
    the estimated parameters as ``Q_``, ``P_``, ``B_``.

    Parameters
    ----------
    n_hidden_states : number of hidden states (failure state included).
    n_signals : size of the signal alphabet.
    restarts : random EM restarts; with more than one, per-entry mean/sd
        across restarts are kept in ``summary_`` and the best-likelihood fit
        is adopted.
    max_iter, tol : EM stopping rule (M-step cap / log-likelihood gain).
    random_state : seed for the restart initializations.
    template : optional SystemModel fixing the frozen-row structure; default
        is an absorbing hidden failure state.
    """

    def __init__(self, n_hidden_states: int = 2, n_signals: int = 2,
                 restarts: int = 1, max_iter: int = 30, tol: float = 1e-6,
                 random_state: int = 0, template: SystemModel | None = None,
                 freeze_absorbing_emissions: bool = False):
        self.n_hidden_states = n_hidden_states
        self.n_signals = n_signals
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state
        self.template = template
        self.freeze_absorbing_emissions = freeze_absorbing_emissions

    def _template(self, data: TrajectorySet) -> SystemModel:
        if self.template is not None:
            return self.template
        L1 = int(data.x1.max())
        return default_template(L1, self.n_hidden_states - 1, self.n_signals - 1)

    def fit(self, X: TrajectorySet, y=None) -> "CovariateHMM":
        template = self._template(X)
        result = multi_start_fit(X, template, restarts=self.restarts,
                                 seed=self.random_state, max_iter=self.max_iter,
                                 tol=self.tol,
                                 freeze_absorbing_emissions=self.freeze_absorbing_emissions)
        self.summary_ = result
        self.result_ = result.best
        theta = result.best.theta_hat
        self.Q_ = np.array(theta.Q)
        self.P_ = np.array(theta.P)
        self.B_ = np.array(theta.B)
        self.loglik_trace_ = result.best.loglik_trace
        self.n_iter_ = result.best.iterations
        self.converged_ = result.best.converged
        self.flags_ = result.best.flags + result.best.q_flags
        self.n_parameters_ = parameter_count(theta.L1, theta.L2, theta.M)
        return self

    def to_model(self) -> SystemModel:
        return self.result_.theta_hat

    def score(self, X: TrajectorySet, y=None) -> float:
        """Total observed-data log-likelihood of X under the fitted parameters."""
        return posteriors(self.to_model(), X).loglik

    def predict_proba(self, X: TrajectorySet) -> np.ndarray:
        """Posterior hidden-state marginals phi for every trajectory and epoch."""
        return posteriors(self.to_model(), X).phi
