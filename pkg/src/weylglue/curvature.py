"""Curvature of metric charts and linearized curvature quantities.

Charts are immutable evaluators exposing the metric and its first two (for
some kinds, four) coordinate derivatives in closed form; the curvature
pipeline below never differentiates numerically.  Finite-difference oracles
are provided separately for testing.

Convention: R_ij = R_kijl g^kl, and the coordinate curvature tensor is
    R_ijkl = (d_i Gamma_jk^s - d_j Gamma_ik^s) g_sl
             + (Gamma_jk^s Gamma_is^t - Gamma_ik^s Gamma_js^t) g_tl,
so the chart delta - 1/3 W_kijl x^k x^l has Weyl curvature W at the origin.
"""

from __future__ import annotations

import numpy as np

from .tensor_core import DIM, weyl_from_riemann
from .fields import CurvatureQuadraticField, PolynomialField, _as_batch

_EYE = np.eye(DIM)


class ChartDomainError(ValueError):
    """Raised when a point lies outside a chart's declared domain."""


class MetricChart:
    """Base chart: flat metric on all of R^4.  Subclasses override the field part."""

    kind = "flat"
    max_order = 4

    def contains(self, x) -> np.ndarray:
        xb, _ = _as_batch(x)
        return np.ones(xb.shape[0], dtype=bool)

    def check_domain(self, x) -> None:
        if not self.contains(x).all():
            raise ChartDomainError(f"point outside {self.kind} chart domain")

    def metric(self, x):
        xb, single = _as_batch(x)
        out = np.broadcast_to(_EYE, (xb.shape[0], DIM, DIM)).copy()
        return out[0] if single else out

    def dmetric(self, x):
        return self.metric_derivative(x, 1)

    def d2metric(self, x):
        return self.metric_derivative(x, 2)

    def metric_derivative(self, x, order: int):
        """Coordinate derivatives of g, shape (..., 4^order, 4, 4)."""
        if order == 0:
            return self.metric(x)
        xb, single = _as_batch(x)
        out = np.zeros((xb.shape[0],) + (DIM,) * order + (DIM, DIM))
        return out[0] if single else out


class FieldChart(MetricChart):
    """Chart g = delta + scale * h for a field with exact derivatives.

    Houses the quadratic curvature models (conformal normal form, its
    inversion, the two scaled ends, the interpolant) as well as arbitrary
    polynomial test metrics.
    """

    def __init__(self, h, scale: float = 1.0, kind: str = "custom",
                 r_min: float = 0.0, r_max: float = np.inf, max_order: int = 4):
        self.h = h
        self.scale = float(scale)
        self.kind = kind
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.max_order = max_order

    def contains(self, x):
        xb, _ = _as_batch(x)
        r = np.sqrt(np.einsum("na,na->n", xb, xb))
        return (r >= self.r_min) & (r <= self.r_max)

    def metric(self, x):
        xb, single = _as_batch(x)
        out = _EYE[None] + self.scale * self.h.derivative(xb, 0)
        return out[0] if single else out

    def metric_derivative(self, x, order: int):
        if order > self.max_order:
            raise ValueError(f"chart {self.kind!r} declares derivatives to order {self.max_order}")
        if order == 0:
            return self.metric(x)
        return self.scale * self.h.derivative(x, order)


class ScaledChart(MetricChart):
    """Constant conformal rescaling g -> c^2 g in the same coordinates."""

    def __init__(self, base: MetricChart, factor: float):
        self.base = base
        self.factor = float(factor)
        self.kind = f"scaled({base.kind})"
        self.max_order = base.max_order

    def contains(self, x):
        return self.base.contains(x)

    def metric(self, x):
        return self.factor * self.base.metric(x)

    def metric_derivative(self, x, order: int):
        return self.factor * self.base.metric_derivative(x, order)


class SumChart(MetricChart):
    """Chart whose metric is base + t * extra field; used by the t-oracles."""

    def __init__(self, base: MetricChart, h, t: float):
        self.base = base
        self.h = h
        self.t = float(t)
        self.kind = f"{base.kind}+t*h"
        self.max_order = min(base.max_order, 4)

    def contains(self, x):
        return self.base.contains(x)

    def metric(self, x):
        return self.base.metric(x) + self.t * self.h.derivative(x, 0)

    def metric_derivative(self, x, order: int):
        if order == 0:
            return self.metric(x)
        return self.base.metric_derivative(x, order) + self.t * self.h.derivative(x, order)


def flat_chart() -> MetricChart:
    return MetricChart()

def cnc_model(w: np.ndarray) -> FieldChart:
    """Conformal normal form chart delta - 1/3 W_kijl x^k x^l."""
    return FieldChart(CurvatureQuadraticField([(-1.0 / 3.0, w, 0.0)]), kind="cnc_model")

def inverted_model(w: np.ndarray, r_min: float = 1e-8) -> FieldChart:
    """Inverted-end chart delta - 1/3 W_kijl x^k x^l / |x|^4."""
    return FieldChart(CurvatureQuadraticField([(-1.0 / 3.0, w, -4.0)]),
                      kind="inverted_model", r_min=r_min)

def polynomial_chart(field: PolynomialField, scale: float = 1.0) -> FieldChart:
    return FieldChart(field, scale=scale, kind="polynomial")


# ---------------------------------------------------------------------------
# curvature pipeline (batched)

def _metric_data(chart: MetricChart, x):
    xb, single = _as_batch(x)
    chart.check_domain(xb)
    g = chart.metric(xb)
    dg = chart.metric_derivative(xb, 1)
    d2g = chart.metric_derivative(xb, 2)
    return xb, single, g, dg, d2g


def christoffel_from_data(g, dg):
    ginv = np.linalg.inv(g)
    # bracket_{s ij} = d_i g_js + d_j g_is - d_s g_ij
    bracket = (np.einsum("nijs->nsij", dg) + np.einsum("njis->nsij", dg)
               - np.einsum("nsij->nsij", dg))
    return 0.5 * np.einsum("nks,nsij->nkij", ginv, bracket)


def dchristoffel_from_data(g, dg, d2g):
    """Coordinate derivative d_l Gamma^k_ij, shape (n, l, k, i, j)."""
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("nka,nlab,nbs->nlks", ginv, dg, ginv)
    bracket = (np.einsum("nijs->nsij", dg) + np.einsum("njis->nsij", dg)
               - np.einsum("nsij->nsij", dg))
    dbracket = (np.einsum("nlijs->nlsij", d2g) + np.einsum("nljis->nlsij", d2g)
                - np.einsum("nlsij->nlsij", d2g))
    return 0.5 * (np.einsum("nlks,nsij->nlkij", dginv, bracket)
                  + np.einsum("nks,nlsij->nlkij", ginv, dbracket))


def riemann_from_data(g, dg, d2g):
    gamma = christoffel_from_data(g, dg)
    dgamma = dchristoffel_from_data(g, dg, d2g)
    # R_ijkl = (d_i Gamma_jk^s - d_j Gamma_ik^s) g_sl + (G_jk^s G_is^t - G_ik^s G_js^t) g_tl
    lin = np.einsum("nisjk,nsl->nijkl", dgamma, g) - np.einsum("njsik,nsl->nijkl", dgamma, g)
    quad = (np.einsum("nsjk,ntis,ntl->nijkl", gamma, gamma, g, optimize=True)
            - np.einsum("nsik,ntjs,ntl->nijkl", gamma, gamma, g, optimize=True))
    return lin + quad


def christoffel(chart: MetricChart, x):
    xb, single, g, dg, _ = _metric_data(chart, x)
    out = christoffel_from_data(g, dg)
    return out[0] if single else out


def riemann(chart: MetricChart, x):
    xb, single, g, dg, d2g = _metric_data(chart, x)
    out = riemann_from_data(g, dg, d2g)
    return out[0] if single else out


def ricci(chart: MetricChart, x):
    xb, single, g, dg, d2g = _metric_data(chart, x)
    riem = riemann_from_data(g, dg, d2g)
    ginv = np.linalg.inv(g)
    out = np.einsum("nkijl,nkl->nij", riem, ginv)
    return out[0] if single else out


def scalar(chart: MetricChart, x):
    xb, single, g, dg, d2g = _metric_data(chart, x)
    riem = riemann_from_data(g, dg, d2g)
    ginv = np.linalg.inv(g)
    ric = np.einsum("nkijl,nkl->nij", riem, ginv)
    out = np.einsum("nij,nij->n", ginv, ric)
    return out[0] if single else out


def weyl(chart: MetricChart, x):
    """Weyl tensor of the chart at x (pointwise only)."""
    xb, single, g, dg, d2g = _metric_data(chart, x)
    riem = riemann_from_data(g, dg, d2g)
    ginv = np.linalg.inv(g)
    ric = np.einsum("nkijl,nkl->nij", riem, ginv)
    if single:
        return weyl_from_riemann(riem[0], g[0], ric[0])
    return np.stack([weyl_from_riemann(riem[k], g[k], ric[k]) for k in range(xb.shape[0])])


def weyl_density(chart: MetricChart, x):
    """Pointwise |W|^2_g sqrt(det g), the integrand of the Weyl functional."""
    xb, single, g, dg, d2g = _metric_data(chart, x)
    riem = riemann_from_data(g, dg, d2g)
    ginv = np.linalg.inv(g)
    ric = np.einsum("nkijl,nkl->nij", riem, ginv)
    scal = np.einsum("nij,nij->n", ginv, ric)
    n = DIM
    ric_part = (np.einsum("njk,nil->nijkl", ric, g) + np.einsum("nil,njk->nijkl", ric, g)
                - np.einsum("nik,njl->nijkl", ric, g) - np.einsum("njl,nik->nijkl", ric, g))
    scal_part = (np.einsum("njk,nil->nijkl", g, g) - np.einsum("nik,njl->nijkl", g, g))
    w = riem - ric_part / (n - 2) + scal[:, None, None, None, None] * scal_part / ((n - 1) * (n - 2))
    w_up = np.einsum("nia,njb,nkc,nld,nabcd->nijkl", ginv, ginv, ginv, ginv, w,
                     optimize=True)
    dens = np.einsum("nijkl,nijkl->n", w_up, w) * np.sqrt(np.linalg.det(g))
    return dens[0] if single else dens


# ---------------------------------------------------------------------------
# linearized quantities

def linearize_curvature(chart: MetricChart, h, x) -> dict:
    """All first-order variations of curvature at x in the direction h.

    ``h`` is a symmetric 2-tensor field with derivatives to order 2.  Returns
    a dict with keys inv_dot, gamma_dot, riem13_dot, riem04_dot, ric_dot,
    scal_dot, weyl_dot.  Covariant derivatives of h are expanded into
    partials plus Christoffel corrections of the background chart.
    """
    xb, single, g, dg, d2g = _metric_data(chart, x)
    if not single:
        raise ValueError("linearize_curvature expects a single point")
    ginv = np.linalg.inv(g)
    gamma = christoffel_from_data(g, dg)
    dgamma = dchristoffel_from_data(g, dg, d2g)
    riem = riemann_from_data(g, dg, d2g)
    riem13 = np.einsum("nijks,nsl->nijkl", riem, ginv)  # R_ijk^l
    ric = np.einsum("nkijl,nkl->nij", riem, ginv)
    scal = np.einsum("nij,nij->n", ginv, ric)

    h0 = h.derivative(xb, 0)
    h1 = h.derivative(xb, 1)
    h2 = h.derivative(xb, 2)

    # nabla_a h_ij and nabla^2_{ab} h_ij
    nh = (h1 - np.einsum("nsai,nsj->naij", gamma, h0)
          - np.einsum("nsaj,nis->naij", gamma, h0))
    dnh = (h2
           - np.einsum("nbsai,nsj->nbaij", dgamma, h0)
           - np.einsum("nsai,nbsj->nbaij", gamma, h1)
           - np.einsum("nbsaj,nis->nbaij", dgamma, h0)
           - np.einsum("nsaj,nbis->nbaij", gamma, h1))
    n2h = (dnh
           - np.einsum("nsab,nsij->nabij", gamma, nh)
           - np.einsum("nsai,nbsj->nabij", gamma, nh)
           - np.einsum("nsaj,nbis->nabij", gamma, nh))

    inv_dot = -np.einsum("nai,nbj,nab->nij", ginv, ginv, h0)
    gamma_dot = 0.5 * np.einsum(
        "nkl,nlij->nkij", ginv,
        np.einsum("nilj->nlij", nh) + np.einsum("njil->nlij", nh) - np.einsum("nlij->nlij", nh))

    riem13_dot = 0.5 * np.einsum(
        "nsl,nijks->nijkl", ginv,
        np.einsum("nikjs->nijks", n2h) + np.einsum("njsik->nijks", n2h)
        - np.einsum("nisjk->nijks", n2h) - np.einsum("njkis->nijks", n2h)
        - np.einsum("nijsr,nrk->nijks", riem13, h0)
        - np.einsum("nijkr,nsr->nijks", riem13, h0))

    riem04_dot = 0.5 * (
        np.einsum("nikjl->nijkl", n2h) + np.einsum("njlik->nijkl", n2h)
        - np.einsum("niljk->nijkl", n2h) - np.einsum("njkil->nijkl", n2h)
        + np.einsum("nijks,nls->nijkl", riem13, h0)
        - np.einsum("nijls,nsk->nijkl", riem13, h0))

    trh = np.einsum("nij,nij->n", ginv, h0)
    # gradient and hessian of the scalar tr h = g^{ij} h_ij
    dginv = -np.einsum("nia,nkab,nbj->nkij", ginv, dg, ginv)
    dtrh = np.einsum("nkij,nij->nk", dginv, h0) + np.einsum("nij,nkij->nk", ginv, h1)
    d2ginv_part = (-np.einsum("nlia,nkab,nbj->nklij", dginv, dg, ginv)
                   - np.einsum("nia,nlkab,nbj->nklij", ginv, d2g, ginv)
                   - np.einsum("nia,nkab,nlbj->nklij", ginv, dg, dginv))
    d2trh = (np.einsum("nklij,nij->nkl", d2ginv_part, h0)
             + np.einsum("nkij,nlij->nkl", dginv, h1)
             + np.einsum("nlij,nkij->nkl", dginv, h1)
             + np.einsum("nij,nklij->nkl", ginv, h2))
    hess_trh = d2trh - np.einsum("nsab,ns->nab", gamma, dtrh)

    # divergence (delta h)_i = g^{ab} nabla_a h_bi and its covariant derivative
    divh = np.einsum("nab,nabi->ni", ginv, nh)
    ddivh = (np.einsum("nkab,nabi->nki", dginv, nh)
             + np.einsum("nab,nkabi->nki", ginv, dnh))
    ndivh = ddivh - np.einsum("nski,ns->nki", gamma, divh)

    lap_h = np.einsum("nab,nabij->nij", ginv, n2h)
    ric_up = np.einsum("nst,nis->nit", ginv, ric)  # R_i^t
    riem_mixed = np.einsum("nrt,nrijs->ntijs", ginv, riem13)  # R^t_ij^s
    kterm = (np.einsum("nis,nsj->nij", ric_up, h0)
             + np.einsum("njs,nis->nij", ric_up, h0)
             - 2.0 * np.einsum("ntijs,nts->nij", riem_mixed, h0))
    lterm = -lap_h - hess_trh + ndivh + np.einsum("nki->nik", ndivh)
    ric_dot = 0.5 * (lterm + kterm)

    div2h = np.einsum("nia,njb,nabij->n", ginv, ginv, n2h)
    lap_trh = np.einsum("nab,nab->n", ginv, hess_trh)
    hric = np.einsum("nia,njb,nab,nij->n", ginv, ginv, h0, ric)
    scal_dot = -lap_trh + div2h - hric

    # Weyl variation by differentiating the trace decomposition
    #   W = Riem - (1/(n-2)) Ric (x) g - (R/((n-1)(n-2))) g (x) g
    # through the already assembled variations of each factor.
    n4 = DIM
    c2 = 1.0 / (n4 - 2)
    c3 = 1.0 / ((n4 - 1) * (n4 - 2))

    def trace_block(a, b):
        return (np.einsum("njk,nil->nijkl", a, b) + np.einsum("nil,njk->nijkl", a, b)
                - np.einsum("nik,njl->nijkl", a, b) - np.einsum("njl,nik->nijkl", a, b))

    gg_combo = (np.einsum("njk,nil->nijkl", g, g) - np.einsum("nik,njl->nijkl", g, g))
    hg_combo = (np.einsum("njk,nil->nijkl", h0, g) + np.einsum("njk,nil->nijkl", g, h0)
                - np.einsum("nik,njl->nijkl", h0, g) - np.einsum("nik,njl->nijkl", g, h0))
    weyl_dot = (riem04_dot
                - c2 * (trace_block(ric_dot, g) + trace_block(ric, h0))
                + c3 * (scal_dot[:, None, None, None, None] * gg_combo
                        + scal[:, None, None, None, None] * hg_combo))

    return {"inv_dot": inv_dot[0], "gamma_dot": gamma_dot[0],
            "riem13_dot": riem13_dot[0], "riem04_dot": riem04_dot[0],
            "ric_dot": ric_dot[0], "scal_dot": float(scal_dot[0]),
            "weyl_dot": weyl_dot[0]}


def linearized_weyl_flat_tt(h, x, tol: float = 1e-10):
    """Linearized Weyl tensor at the flat metric for a TT perturbation.

    W_dot_aijb = 1/2 (d2_aj h_ib + d2_ib h_aj - d2_ab h_ij - d2_ij h_ab)
               + 1/4 (delta_ab Lap h_ij + delta_ij Lap h_ab
                      - delta_ib Lap h_aj - delta_aj Lap h_ib).
    """
    xb, single = _as_batch(x)
    h0 = h.derivative(xb, 0)
    h1 = h.derivative(xb, 1)
    tr = np.abs(np.einsum("nii->n", h0)).max()
    div = np.abs(np.einsum("nkki->ni", h1)).max()
    if max(tr, div) > tol:
        raise ValueError("not transverse-traceless")
    h2 = h.derivative(xb, 2)
    lap = np.einsum("naaij->nij", h2)
    wdot = 0.5 * (np.einsum("najib->naijb", h2) + np.einsum("nibaj->naijb", h2)
                  - np.einsum("nabij->naijb", h2) - np.einsum("nijab->naijb", h2))
    wdot += 0.25 * (np.einsum("ab,nij->naijb", _EYE, lap)
                    + np.einsum("ij,nab->naijb", _EYE, lap)
                    - np.einsum("ib,naj->naijb", _EYE, lap)
                    - np.einsum("aj,nib->naijb", _EYE, lap))
    return wdot[0] if single else wdot


# ---------------------------------------------------------------------------
# finite-difference oracles (testing support)

def fd_metric_data(chart: MetricChart, x, step: float = 1e-5):
    """Metric derivative arrays (g, dg, d2g) at a single point by central
    differences with one Richardson extrapolation level."""
    x = np.asarray(x, dtype=float)

    def dg_at(hh):
        out = np.zeros((DIM, DIM, DIM))
        for a in range(DIM):
            e = np.zeros(DIM); e[a] = hh
            out[a] = (chart.metric(x + e) - chart.metric(x - e)) / (2 * hh)
        return out

    def d2g_at(hh):
        out = np.zeros((DIM, DIM, DIM, DIM))
        g0 = chart.metric(x)
        for a in range(DIM):
            ea = np.zeros(DIM); ea[a] = hh
            out[a, a] = (chart.metric(x + ea) - 2 * g0 + chart.metric(x - ea)) / hh ** 2
            for b in range(a + 1, DIM):
                eb = np.zeros(DIM); eb[b] = hh
                mixed = (chart.metric(x + ea + eb) - chart.metric(x + ea - eb)
                         - chart.metric(x - ea + eb) + chart.metric(x - ea - eb)) / (4 * hh ** 2)
                out[a, b] = mixed
                out[b, a] = mixed
        return out

    dg = (4 * dg_at(step / 2) - dg_at(step)) / 3.0
    d2g = (4 * d2g_at(step / 2) - d2g_at(step)) / 3.0
    return chart.metric(x), dg, d2g


def fd_curvature(chart: MetricChart, x, step: float = 1e-5) -> dict:
    """Curvature computed from finite-difference metric derivatives."""
    g, dg, d2g = fd_metric_data(chart, x, step)
    g, dg, d2g = g[None], dg[None], d2g[None]
    gamma = christoffel_from_data(g, dg)[0]
    riem = riemann_from_data(g, dg, d2g)[0]
    ginv = np.linalg.inv(g[0])
    ric = np.einsum("kijl,kl->ij", riem, ginv)
    scal = float(np.einsum("ij,ij->", ginv, ric))
    return {"christoffel": gamma, "riemann": riem, "ricci": ric, "scalar": scal}


def fd_linearize(chart: MetricChart, h, x, quantity: str, step: float = 1e-4):
    """d/dt at t=0 of a nonlinear curvature quantity of chart + t*h.

    ``quantity`` is one of inv, gamma, riem13, riem04, ric, scal, weyl.
    Central differences in t with one Richardson level.
    """
    x = np.asarray(x, dtype=float)

    def value(t):
        c = SumChart(chart, h, t)
        g = c.metric(x)[None]
        dg = c.metric_derivative(x, 1)[None]
        d2g = c.metric_derivative(x, 2)[None]
        ginv = np.linalg.inv(g[0])
        if quantity == "inv":
            return ginv
        gamma = christoffel_from_data(g, dg)[0]
        if quantity == "gamma":
            return gamma
        riem = riemann_from_data(g, dg, d2g)[0]
        if quantity == "riem04":
            return riem
        if quantity == "riem13":
            return np.einsum("ijks,sl->ijkl", riem, ginv)
        ric = np.einsum("kijl,kl->ij", riem, ginv)
        if quantity == "ric":
            return ric
        scal = np.einsum("ij,ij->", ginv, ric)
        if quantity == "scal":
            return scal
        if quantity == "weyl":
            return weyl_from_riemann(riem, g[0], ric, float(scal))
        raise ValueError(f"unknown quantity {quantity!r}")

    def central(tt):
        return (value(tt) - value(-tt)) / (2 * tt)

    return (4 * central(step / 2) - central(step)) / 3.0
