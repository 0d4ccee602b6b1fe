//! ARIMA and multiplicative seasonal ARIMA.
//!
//! Gaps are linearly interpolated, the series is differenced `d` times at
//! lag 1 and `D` times at lag `s`, and the result is centred on its mean
//! only when no differencing is applied. Coefficients start from a
//! Hannan-Rissanen regression (long-AR residuals standing in for the
//! innovations) and are refined by Gauss-Newton on the conditional sum of
//! squares.
//!
//! Polynomial conventions: `φ(B) = 1 - φ₁B - ...`, `θ(B) = 1 + θ₁B + ...`,
//! and likewise for the seasonal `Φ(Bˢ)`, `Θ(Bˢ)`.

use std::fmt;

use super::ForecastResult;
use crate::data::HourlySeries;
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonalSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal: Option<SeasonalSpec>,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        let spec = Self {
            p,
            d,
            q,
            seasonal: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn seasonal(
        p: usize,
        d: usize,
        q: usize,
        sp: usize,
        sd: usize,
        sq: usize,
        period: usize,
    ) -> Result<Self> {
        let spec = Self {
            p,
            d,
            q,
            seasonal: Some(SeasonalSpec {
                p: sp,
                d: sd,
                q: sq,
                period,
            }),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// ARIMA(2,1,1).
    pub fn default_arima() -> Self {
        Self {
            p: 2,
            d: 1,
            q: 1,
            seasonal: None,
        }
    }

    /// SARIMA(1,0,1)(0,1,1) with a daily period.
    pub fn default_sarima() -> Self {
        Self {
            p: 1,
            d: 0,
            q: 1,
            seasonal: Some(SeasonalSpec {
                p: 0,
                d: 1,
                q: 1,
                period: 24,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.seasonal.unwrap_or(SeasonalSpec {
            p: 0,
            d: 0,
            q: 0,
            period: 2,
        });
        if s.period < 2 {
            return Err(Error::arg(format!(
                "seasonal period must be >= 2, got {}",
                s.period
            )));
        }
        if self.p + self.q + s.p + s.q == 0 && self.d + s.d == 0 {
            return Err(Error::arg(format!(
                "{self} has no AR, MA or differencing terms"
            )));
        }
        Ok(())
    }

    fn seasonal_or_zero(&self) -> SeasonalSpec {
        self.seasonal.unwrap_or(SeasonalSpec {
            p: 0,
            d: 0,
            q: 0,
            period: 0,
        })
    }

    fn has_mean(&self) -> bool {
        self.d + self.seasonal_or_zero().d == 0
    }

    /// AR and MA coefficients, plus the mean when it is estimated.
    pub fn n_params(&self) -> usize {
        let s = self.seasonal_or_zero();
        self.p + self.q + s.p + s.q + usize::from(self.has_mean())
    }

    /// Shortest training series accepted by [`fit_arima`].
    pub fn min_length(&self) -> usize {
        let s = self.seasonal_or_zero();
        let base = 10 * (self.p + self.q + 1) + s.period * (s.d + s.p + s.q);
        base.max(3 * s.period)
    }
}

impl fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seasonal {
            None => write!(f, "arima({},{},{})", self.p, self.d, self.q),
            Some(s) => write!(
                f,
                "sarima({},{},{})({},{},{})_{}",
                self.p, self.d, self.q, s.p, s.d, s.q, s.period
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    spec: ArimaSpec,
    ar: Vec<f64>,
    seasonal_ar: Vec<f64>,
    ma: Vec<f64>,
    seasonal_ma: Vec<f64>,
    mean: f64,
    sigma2: f64,
    history: Vec<f64>,
    /// Innovations aligned with `history`; zero over the warm-up.
    residuals: Vec<f64>,
}

impl ArimaModel {
    /// Model with given coefficients conditioned on `history`.
    /// The innovation variance is the residual mean square.
    #[allow(clippy::too_many_arguments)]
    pub fn from_coefficients(
        spec: ArimaSpec,
        history: Vec<f64>,
        mean: f64,
        ar: Vec<f64>,
        seasonal_ar: Vec<f64>,
        ma: Vec<f64>,
        seasonal_ma: Vec<f64>,
    ) -> Result<Self> {
        spec.validate()?;
        let s = spec.seasonal_or_zero();
        if ar.len() != spec.p
            || ma.len() != spec.q
            || seasonal_ar.len() != s.p
            || seasonal_ma.len() != s.q
        {
            return Err(Error::arg(format!(
                "coefficient counts do not match {spec}"
            )));
        }
        let offset = spec.d + s.d * s.period;
        if history.len() <= offset {
            return Err(Error::arg(format!(
                "history of {} values is too short for {spec}",
                history.len()
            )));
        }
        let mut model = Self {
            spec,
            ar,
            seasonal_ar,
            ma,
            seasonal_ma,
            mean,
            sigma2: 0.0,
            history,
            residuals: vec![],
        };
        let w = model.working_series();
        let (a, b) = model.expanded();
        let (e, t0) = css_residuals(&w, &a, &b);
        let n_eff = (w.len() - t0).max(1);
        model.sigma2 = e[t0..].iter().map(|v| v * v).sum::<f64>() / n_eff as f64;
        let mut residuals = vec![0.0; offset];
        residuals.extend(e);
        model.residuals = residuals;
        Ok(model)
    }

    pub fn spec(&self) -> &ArimaSpec {
        &self.spec
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn seasonal_ar(&self) -> &[f64] {
        &self.seasonal_ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn seasonal_ma(&self) -> &[f64] {
        &self.seasonal_ma
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn innovation_variance(&self) -> f64 {
        self.sigma2
    }

    /// Differenced, centred series the ARMA part is fitted to.
    fn working_series(&self) -> Vec<f64> {
        let s = self.spec.seasonal_or_zero();
        let mut w = self.history.clone();
        for _ in 0..self.spec.d {
            w = difference(&w, 1);
        }
        for _ in 0..s.d {
            w = difference(&w, s.period);
        }
        w.iter_mut().for_each(|v| *v -= self.mean);
        w
    }

    /// Expanded AR coefficients `a` (with `φ*(B) = 1 - Σ aᵢBⁱ`) and MA
    /// coefficients `b` (with `θ*(B) = 1 + Σ bⱼBʲ`), index 0 unused.
    fn expanded(&self) -> (Vec<f64>, Vec<f64>) {
        expand(
            &self.ar,
            &self.seasonal_ar,
            &self.ma,
            &self.seasonal_ma,
            self.spec.seasonal_or_zero().period,
        )
    }
}

/// `x_t - x_{t-lag}`.
pub fn difference(x: &[f64], lag: usize) -> Vec<f64> {
    (lag..x.len()).map(|t| x[t] - x[t - lag]).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Full polynomial `[1, c₁, c₂, ...]` for `1 + sign·Σ coef_i B^{lag·i}`.
fn lag_poly(coef: &[f64], lag: usize, sign: f64) -> Vec<f64> {
    let mut p = vec![0.0; coef.len() * lag + 1];
    p[0] = 1.0;
    for (i, &c) in coef.iter().enumerate() {
        p[(i + 1) * lag] = sign * c;
    }
    p
}

fn expand(ar: &[f64], sar: &[f64], ma: &[f64], sma: &[f64], period: usize) -> (Vec<f64>, Vec<f64>) {
    let phi = poly_mul(&lag_poly(ar, 1, -1.0), &lag_poly(sar, period.max(1), -1.0));
    let theta = poly_mul(&lag_poly(ma, 1, 1.0), &lag_poly(sma, period.max(1), 1.0));
    let a = phi.iter().map(|c| -c).collect::<Vec<_>>();
    (a, theta)
}

fn nonzero_lags(c: &[f64]) -> Vec<(usize, f64)> {
    c.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect()
}

/// Conditional residuals `e_t = w_t - Σ aᵢ w_{t-i} - Σ bⱼ e_{t-j}` from
/// `t0 = deg(a)`, with zeros before `t0`.
fn css_residuals(w: &[f64], a: &[f64], b: &[f64]) -> (Vec<f64>, usize) {
    let t0 = (a.len() - 1).min(w.len());
    let al = nonzero_lags(a);
    let bl = nonzero_lags(b);
    let mut e = vec![0.0; w.len()];
    for t in t0..w.len() {
        let mut v = w[t];
        for &(i, c) in &al {
            v -= c * w[t - i];
        }
        for &(j, c) in &bl {
            if j <= t {
                v -= c * e[t - j];
            }
        }
        e[t] = v;
    }
    (e, t0)
}

/// Whether `1 - Σ aᵢ Bⁱ` has all roots outside the unit circle, by
/// Levinson step-down: every reflection coefficient must satisfy |k| < 1.
pub fn is_stationary(a: &[f64]) -> bool {
    let mut cur = a.to_vec();
    while let Some(&k) = cur.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = cur.len();
        let denom = 1.0 - k * k;
        cur = (0..m - 1)
            .map(|i| (cur[i] + k * cur[m - 2 - i]) / denom)
            .collect();
    }
    true
}

/// Yule-Walker AR(m) coefficients by Levinson-Durbin recursion.
fn yule_walker(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let acov: Vec<f64> = (0..=m)
        .map(|k| (k..n).map(|t| x[t] * x[t - k]).sum::<f64>() / n as f64)
        .collect();
    if acov[0] <= 0.0 {
        return vec![0.0; m];
    }
    let mut phi: Vec<f64> = Vec::with_capacity(m);
    let mut v = acov[0];
    for k in 1..=m {
        let num = acov[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, p)| p * acov[k - 1 - j])
                .sum::<f64>();
        let refl = num / v;
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - refl * prev[k - 2 - j];
        }
        phi.push(refl);
        v *= 1.0 - refl * refl;
        if v <= 0.0 {
            phi.resize(m, 0.0);
            break;
        }
    }
    phi
}

struct Layout {
    p: usize,
    sp: usize,
    q: usize,
    sq: usize,
    period: usize,
}

impl Layout {
    fn split<'a>(&self, beta: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (ar, rest) = beta.split_at(self.p);
        let (sar, rest) = rest.split_at(self.sp);
        let (ma, sma) = rest.split_at(self.q);
        (ar, sar, ma, sma)
    }

    /// Whether both MA polynomials have all roots outside the unit circle.
    fn invertible(&self, beta: &[f64]) -> bool {
        let (_, _, ma, sma) = self.split(beta);
        let neg = |c: &[f64]| c.iter().map(|v| -v).collect::<Vec<_>>();
        is_stationary(&neg(ma)) && is_stationary(&neg(sma))
    }

    fn css(&self, w: &[f64], beta: &[f64]) -> (Vec<f64>, usize) {
        let (ar, sar, ma, sma) = self.split(beta);
        let (a, b) = expand(ar, sar, ma, sma, self.period);
        css_residuals(w, &a, &b)
    }
}

/// Hannan-Rissanen starting values: regress `w_t` on its AR lags and on
/// lagged long-AR residuals at the MA lags.
fn hannan_rissanen(w: &[f64], layout: &Layout) -> Result<Vec<f64>> {
    let k = layout.p + layout.sp + layout.q + layout.sq;
    let s = layout.period.max(1);
    let n = w.len();
    let needs_proxy = layout.q + layout.sq > 0;
    let mut proxy = vec![0.0; n];
    let mut m = 0;
    if needs_proxy {
        let seasonal_span = if layout.sp + layout.sq > 0 {
            s * (layout.sp.max(layout.sq) + 1)
        } else {
            0
        };
        m = 20
            .max(layout.p + layout.q + 5)
            .max(seasonal_span)
            .min(n / 4);
        let mean = w.iter().sum::<f64>() / n as f64;
        let centred: Vec<f64> = w.iter().map(|v| v - mean).collect();
        let pi = yule_walker(&centred, m);
        for t in m..n {
            proxy[t] = centred[t]
                - pi.iter()
                    .enumerate()
                    .map(|(i, c)| c * centred[t - 1 - i])
                    .sum::<f64>();
        }
    }
    let mut lags: Vec<(bool, usize)> = Vec::with_capacity(k);
    lags.extend((1..=layout.p).map(|i| (false, i)));
    lags.extend((1..=layout.sp).map(|i| (false, i * s)));
    lags.extend((1..=layout.q).map(|i| (true, i)));
    lags.extend((1..=layout.sq).map(|i| (true, i * s)));
    let max_lag = lags.iter().map(|l| l.1).max().unwrap_or(0);
    let t0 = m + max_lag;
    if n < t0 + k + 10 {
        return Err(Error::arg(format!(
            "differenced series of {n} values is too short for the regression (needs {})",
            t0 + k + 10
        )));
    }
    let rows = n - t0;
    let mut x = Matrix::zeros(rows, k);
    let y: Vec<f64> = w[t0..].to_vec();
    for r in 0..rows {
        let t = t0 + r;
        for (c, &(is_ma, lag)) in lags.iter().enumerate() {
            x[(r, c)] = if is_ma { proxy[t - lag] } else { w[t - lag] };
        }
    }
    solve_least_squares(&x, &y)
}

/// Least squares with a tiny relative ridge for numerical safety.
fn solve_least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (mut gram, rhs) = crate::linalg::normal_equations(x, y);
    let k = gram.rows();
    let scale = (0..k).map(|i| gram[(i, i)]).sum::<f64>() / k as f64;
    for i in 0..k {
        gram[(i, i)] += 1e-12 * scale.max(f64::MIN_POSITIVE);
    }
    let l = cholesky(&gram)?;
    Ok(cholesky_solve(&l, &rhs))
}

fn sum_sq(e: &[f64]) -> f64 {
    e.iter().map(|v| v * v).sum()
}

/// Gauss-Newton on the conditional sum of squares with a central-difference
/// Jacobian and step halving. Steps that leave the invertible MA region
/// are rejected; a non-invertible start has its MA part zeroed.
fn gauss_newton(w: &[f64], layout: &Layout, mut beta: Vec<f64>) -> Vec<f64> {
    const MAX_ITER: usize = 100;
    let k = beta.len();
    if !layout.invertible(&beta) {
        beta[layout.p + layout.sp..]
            .iter_mut()
            .for_each(|v| *v = 0.0);
    }
    let css_of = |b: &[f64]| {
        if !layout.invertible(b) {
            return f64::INFINITY;
        }
        let (e, t0) = layout.css(w, b);
        let v = sum_sq(&e[t0..]);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut current = css_of(&beta);
    for _ in 0..MAX_ITER {
        if current == 0.0 || !current.is_finite() {
            break;
        }
        let (e, t0) = layout.css(w, &beta);
        let e = &e[t0..];
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let h = 1e-6 * beta[j].abs().max(0.1);
            let mut up = beta.clone();
            up[j] += h;
            let mut dn = beta.clone();
            dn[j] -= h;
            let (eu, _) = layout.css(w, &up);
            let (ed, _) = layout.css(w, &dn);
            jac.push(
                eu[t0..]
                    .iter()
                    .zip(&ed[t0..])
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect(),
            );
        }
        let mut jtj = Matrix::zeros(k, k);
        let mut jte = vec![0.0; k];
        for a in 0..k {
            jte[a] = jac[a].iter().zip(e).map(|(x, y)| x * y).sum();
            for b in a..k {
                let v: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
                jtj[(a, b)] = v;
                jtj[(b, a)] = v;
            }
        }
        let scale = (0..k).map(|i| jtj[(i, i)]).sum::<f64>() / k as f64;
        for i in 0..k {
            jtj[(i, i)] += 1e-10 * scale.max(f64::MIN_POSITIVE);
        }
        let Ok(l) = cholesky(&jtj) else { break };
        let step = cholesky_solve(&l, &jte);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - alpha * s).collect();
            let v = css_of(&trial);
            if v < current {
                accepted = Some((trial, v));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, v)) = accepted else { break };
        let gain = (current - v) / current;
        beta = next;
        current = v;
        if gain < 1e-10 {
            break;
        }
    }
    beta
}

fn fit_impl(train: &HourlySeries, spec: &ArimaSpec) -> Result<ArimaModel> {
    spec.validate()?;
    let y = train.interpolated()?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series is not finite after interpolation"));
    }
    if y.len() < spec.min_length() {
        return Err(Error::arg(format!(
            "{spec} needs at least {} observations, got {}",
            spec.min_length(),
            y.len()
        )));
    }
    let s = spec.seasonal_or_zero();
    let mut w = y.clone();
    for _ in 0..spec.d {
        w = difference(&w, 1);
    }
    for _ in 0..s.d {
        w = difference(&w, s.period);
    }
    let mean = if spec.has_mean() {
        w.iter().sum::<f64>() / w.len() as f64
    } else {
        0.0
    };
    w.iter_mut().for_each(|v| *v -= mean);

    let layout = Layout {
        p: spec.p,
        sp: s.p,
        q: spec.q,
        sq: s.q,
        period: s.period,
    };
    let k = spec.p + s.p + spec.q + s.q;
    let beta = if k == 0 {
        vec![]
    } else {
        let init = hannan_rissanen(&w, &layout)?;
        gauss_newton(&w, &layout, init)
    };
    let (ar, sar, ma, sma) = layout.split(&beta);
    if !is_stationary(ar) || !is_stationary(sar) {
        log::warn!("{spec}: fitted AR polynomial has a root on or inside the unit circle");
    }
    let mut model = ArimaModel::from_coefficients(
        *spec,
        y,
        mean,
        ar.to_vec(),
        sar.to_vec(),
        ma.to_vec(),
        sma.to_vec(),
    )?;
    let (e, t0) = css_residuals(&w, &model.expanded().0, &model.expanded().1);
    let n_eff = w.len() - t0;
    model.sigma2 = sum_sq(&e[t0..]) / n_eff.saturating_sub(k).max(1) as f64;
    Ok(model)
}

pub fn fit_arima(train: &HourlySeries, spec: &ArimaSpec) -> Result<ArimaModel> {
    fit_impl(train, spec)
}

/// As [`fit_arima`], but requires a seasonal component.
pub fn fit_sarima(train: &HourlySeries, spec: &ArimaSpec) -> Result<ArimaModel> {
    if spec.seasonal.is_none() {
        return Err(Error::arg(format!("{spec} has no seasonal component")));
    }
    fit_impl(train, spec)
}

/// Recursive forecast with future innovations at zero and Gaussian
/// intervals from the psi-weights of the full (integrated) model.
pub fn forecast_arima(model: &ArimaModel, horizon: usize) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    let s = model.spec.seasonal_or_zero();
    let (a, b) = model.expanded();
    let mut full: Vec<f64> = a.iter().map(|c| -c).collect();
    full[0] = 1.0;
    for _ in 0..model.spec.d {
        full = poly_mul(&full, &[1.0, -1.0]);
    }
    for _ in 0..s.d {
        let mut seasonal = vec![0.0; s.period + 1];
        seasonal[0] = 1.0;
        seasonal[s.period] = -1.0;
        full = poly_mul(&full, &seasonal);
    }
    // x_t = Σ c_i x_{t-i} + e_t + Σ b_j e_{t-j}
    let c: Vec<(usize, f64)> = nonzero_lags(&full)
        .into_iter()
        .map(|(i, v)| (i, -v))
        .collect();
    let bl = nonzero_lags(&b);

    let n = model.history.len();
    let mut x: Vec<f64> = model.history.iter().map(|v| v - model.mean).collect();
    let mut e = model.residuals.clone();
    for t in n..n + horizon {
        let mut v = 0.0;
        for &(i, ci) in &c {
            if i <= t {
                v += ci * x[t - i];
            }
        }
        for &(j, bj) in &bl {
            if j <= t {
                v += bj * e[t - j];
            }
        }
        x.push(v);
        e.push(0.0);
    }
    let point: Vec<f64> = x[n..].iter().map(|v| v + model.mean).collect();

    let mut psi = vec![1.0];
    for j in 1..horizon {
        let mut v = b.get(j).copied().unwrap_or(0.0);
        for &(i, ci) in &c {
            if i <= j {
                v += ci * psi[j - i];
            }
        }
        psi.push(v);
    }
    let mut acc = 0.0;
    let sd: Vec<f64> = psi
        .iter()
        .map(|p| {
            acc += p * p;
            (model.sigma2 * acc).sqrt()
        })
        .collect();
    Ok(ForecastResult::with_gaussian_interval(point, &sd))
}

/// As [`forecast_arima`], but requires a seasonal model.
pub fn forecast_sarima(model: &ArimaModel, horizon: usize) -> Result<ForecastResult> {
    if model.spec.seasonal.is_none() {
        return Err(Error::arg(format!(
            "{} has no seasonal component",
            model.spec
        )));
    }
    forecast_arima(model, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;

    fn series(v: Vec<f64>) -> HourlySeries {
        HourlySeries::from_values(parse_timestamp("2024-01-01T00:00:00").unwrap(), v).unwrap()
    }

    #[test]
    fn spec_invariants() {
        assert!(ArimaSpec::new(0, 0, 0).is_err());
        assert!(ArimaSpec::new(1, 0, 0).is_ok());
        assert!(ArimaSpec::new(0, 1, 0).is_ok());
        assert!(ArimaSpec::seasonal(0, 0, 0, 0, 1, 0, 1).is_err());
        assert!(ArimaSpec::seasonal(0, 0, 0, 0, 1, 0, 24).is_ok());
    }

    #[test]
    fn random_walk_forecast_is_flat() {
        let m = fit_arima(
            &series(vec![
                10.0, 30.0, 20.0, 25.0, 15.0, 22.0, 31.0, 28.0, 35.0, 33.0, 40.0,
            ]),
            &ArimaSpec::new(0, 1, 0).unwrap(),
        )
        .unwrap();
        let f = forecast_arima(&m, 5).unwrap();
        assert_eq!(f.point, vec![40.0; 5]);
    }

    #[test]
    fn ar1_closed_form_recursion() {
        let spec = ArimaSpec::new(1, 0, 0).unwrap();
        let history = vec![100.0, 103.0, 98.0, 108.0];
        let m =
            ArimaModel::from_coefficients(spec, history, 100.0, vec![0.5], vec![], vec![], vec![])
                .unwrap();
        let f = forecast_arima(&m, 3).unwrap();
        assert_eq!(f.point, vec![104.0, 102.0, 101.0]);
    }

    #[test]
    fn interval_width_non_decreasing() {
        let spec = ArimaSpec::new(1, 1, 1).unwrap();
        let history: Vec<f64> = (0..50)
            .map(|i| (i as f64 * 0.7).sin() * 5.0 + i as f64)
            .collect();
        let m =
            ArimaModel::from_coefficients(spec, history, 0.0, vec![0.4], vec![], vec![0.3], vec![])
                .unwrap();
        let f = forecast_arima(&m, 30).unwrap();
        let (lo, hi) = f.intervals().unwrap();
        let widths: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
        assert!(widths.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ramp_is_continued() {
        let y: Vec<f64> = (0..200).map(|i| 5.0 + 2.0 * i as f64).collect();
        let m = fit_arima(&series(y), &ArimaSpec::new(1, 1, 0).unwrap()).unwrap();
        let f = forecast_arima(&m, 4).unwrap();
        for (h, p) in f.point.iter().enumerate() {
            assert!((p - (5.0 + 2.0 * (200 + h) as f64)).abs() < 1e-8, "{p}");
        }
    }

    #[test]
    fn seasonal_difference_of_periodic_is_zero() {
        let y: Vec<f64> = (0..96).map(|i| ((i % 24) as f64).powi(2)).collect();
        assert!(difference(&y, 24).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_periodic_signal() {
        let y: Vec<f64> = (0..24 * 10)
            .map(|i| 50.0 + 10.0 * (std::f64::consts::TAU * i as f64 / 24.0).sin())
            .collect();
        let spec = ArimaSpec::seasonal(0, 0, 0, 0, 1, 0, 24).unwrap();
        let m = fit_sarima(&series(y[..24 * 9].to_vec()), &spec).unwrap();
        let f = forecast_sarima(&m, 24).unwrap();
        for (p, a) in f.point.iter().zip(&y[24 * 9..]) {
            assert!((p - a).abs() < 1e-9);
        }
    }

    #[test]
    fn too_short_series() {
        let err = fit_arima(&series(vec![1.0; 15]), &ArimaSpec::new(1, 0, 0).unwrap());
        assert!(matches!(err, Err(Error::Argument(_))));
        assert!(fit_sarima(&series(vec![1.0; 300]), &ArimaSpec::new(1, 0, 0).unwrap()).is_err());
    }

    #[test]
    fn stationarity_check() {
        assert!(is_stationary(&[0.5]));
        assert!(!is_stationary(&[1.0]));
        assert!(is_stationary(&[0.5, 0.3]));
        // (1 - 1.5B)(1 - 0.2B): root at 2/3.
        assert!(!is_stationary(&[1.7, -0.3]));
        assert!(is_stationary(&[]));
    }

    #[test]
    fn expansion_is_multiplicative() {
        let (a, b) = expand(&[0.5], &[0.3], &[0.2], &[0.4], 4);
        // (1 - 0.5B)(1 - 0.3B^4) = 1 - 0.5B - 0.3B^4 + 0.15B^5
        assert_eq!(a, vec![-1.0, 0.5, 0.0, 0.0, 0.3, -0.15]);
        // (1 + 0.2B)(1 + 0.4B^4) = 1 + 0.2B + 0.4B^4 + 0.08B^5
        assert!((b[5] - 0.08).abs() < 1e-15 && b[1] == 0.2 && b[4] == 0.4);
    }
}
