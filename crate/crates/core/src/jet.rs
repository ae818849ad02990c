//! Truncated multivariate Taylor polynomials ("jets") and the scalar trait
//! that lets metric and immersion formulas run on `f64`, jets, or duals.
//!
//! A jet stores the Taylor coefficients `c_α` of `f(x0 + δ) = Σ c_α δ^α` in
//! graded order, so a jet of valid order `d` is simply the first `N(d)`
//! coefficients. Products truncate to the smaller valid order of the two
//! factors and derivatives lower it by one, so the stored length always
//! tells how many orders can be trusted.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

/// Monomial bookkeeping for `nvars` variables up to total degree `order`.
pub struct Layout {
    pub nvars: usize,
    pub order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// count[d] = number of monomials of degree ≤ d.
    count: Vec<usize>,
    mul_i: Vec<u16>,
    mul_j: Vec<u16>,
    mul_k: Vec<u16>,
    /// mul_end[d] = number of product triples whose output degree is ≤ d.
    mul_end: Vec<usize>,
    /// per variable: (src, dst, factor) sorted by src degree.
    deriv: Vec<Vec<(u16, u16, f64)>>,
    /// per variable: deriv_end[v][d] = number of entries with src degree ≤ d.
    deriv_end: Vec<Vec<usize>>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layout(n={}, order={})", self.nvars, self.order)
    }
}

fn monomials(nvars: usize, deg: usize) -> Vec<Vec<u8>> {
    if nvars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in monomials(nvars - 1, deg - first) {
            let mut e = vec![first as u8];
            e.append(&mut rest);
            out.push(e);
        }
    }
    out
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps = Vec::new();
        let mut count = Vec::new();
        for d in 0..=order {
            exps.extend(monomials(nvars, d));
            count.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let deg = |e: &Vec<u8>| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut triples: Vec<(usize, u16, u16, u16)> = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if deg(a) + deg(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let k = index[&s];
                triples.push((deg(&s), i as u16, j as u16, k as u16));
            }
        }
        triples.sort_by_key(|t| (t.0, t.3));
        let mut mul_end = vec![0; order + 1];
        for d in 0..=order {
            mul_end[d] = triples.iter().filter(|t| t.0 <= d).count();
        }

        let mut deriv = Vec::new();
        let mut deriv_end = Vec::new();
        for v in 0..nvars {
            let mut list: Vec<(usize, u16, u16, f64)> = Vec::new();
            for (src, e) in exps.iter().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut t = e.clone();
                t[v] -= 1;
                list.push((deg(e), src as u16, index[&t] as u16, e[v] as f64));
            }
            list.sort_by_key(|t| (t.0, t.1));
            let ends = (0..=order)
                .map(|d| list.iter().filter(|t| t.0 <= d).count())
                .collect();
            deriv.push(list.into_iter().map(|t| (t.1, t.2, t.3)).collect());
            deriv_end.push(ends);
        }

        Layout {
            nvars,
            order,
            mul_i: triples.iter().map(|t| t.1).collect(),
            mul_j: triples.iter().map(|t| t.2).collect(),
            mul_k: triples.iter().map(|t| t.3).collect(),
            exps,
            index,
            count,
            mul_end,
            deriv,
            deriv_end,
        }
    }

    /// Shared layout for `nvars` variables and maximal order `order`.
    pub fn get(nvars: usize, order: usize) -> &'static Layout {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Layout>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((nvars, order))
            .or_insert_with(|| Box::leak(Box::new(Layout::build(nvars, order))))
    }

    pub fn len_for(&self, order: usize) -> usize {
        self.count[order]
    }

    fn order_of_len(&self, len: usize) -> usize {
        self.count
            .iter()
            .position(|&c| c == len)
            .expect("jet length does not match a truncation order")
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

/// Truncated Taylor polynomial. `layout == None` marks a constant, which
/// combines with any layout and has unbounded valid order.
#[derive(Clone)]
pub struct Jet {
    layout: Option<&'static Layout>,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layout {
            None => write!(f, "Jet::const({})", self.c[0]),
            Some(l) => write!(
                f,
                "Jet(n={}, order={}, {:?})",
                l.nvars,
                self.order(),
                self.c
            ),
        }
    }
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet {
            layout: None,
            c: vec![v],
        }
    }

    /// Constant with an explicit layout and order (zero higher coefficients).
    pub fn constant_in(layout: &'static Layout, order: usize, v: f64) -> Jet {
        let mut c = vec![0.0; layout.len_for(order)];
        c[0] = v;
        Jet {
            layout: Some(layout),
            c,
        }
    }

    /// The coordinate function `x0 + δ_var`.
    pub fn variable(layout: &'static Layout, order: usize, var: usize, x0: f64) -> Jet {
        let mut j = Jet::constant_in(layout, order, x0);
        if order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            j.c[layout.index_of(&e).unwrap()] = 1.0;
        }
        j
    }

    /// Seeds `x0 + δ` for every coordinate.
    pub fn seed(layout: &'static Layout, order: usize, x0: &[f64]) -> Vec<Jet> {
        x0.iter()
            .enumerate()
            .map(|(v, &x)| Jet::variable(layout, order, v, x))
            .collect()
    }

    pub fn from_coeffs(layout: &'static Layout, c: Vec<f64>) -> Jet {
        layout.order_of_len(c.len());
        Jet {
            layout: Some(layout),
            c,
        }
    }

    pub fn layout(&self) -> Option<&'static Layout> {
        self.layout
    }

    pub fn is_constant(&self) -> bool {
        self.layout.is_none()
    }

    /// Valid truncation order (`usize::MAX` for constants).
    pub fn order(&self) -> usize {
        match self.layout {
            None => usize::MAX,
            Some(l) => l.order_of_len(self.c.len()),
        }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient of the monomial with the given exponents (0 if
    /// beyond the stored order).
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        match self.layout {
            None => {
                if exps.iter().all(|&e| e == 0) {
                    self.c[0]
                } else {
                    0.0
                }
            }
            Some(l) => match l.index_of(exps) {
                Some(i) if i < self.c.len() => self.c[i],
                _ => 0.0,
            },
        }
    }

    /// Partial derivative `∂^α f(x0) = α! c_α`.
    pub fn derivative(&self, exps: &[u8]) -> f64 {
        let fact: f64 = exps
            .iter()
            .map(|&e| (1..=e as u32).map(|k| k as f64).product::<f64>())
            .product();
        self.coeff(exps) * fact
    }

    /// First partial derivative at the expansion point.
    pub fn d1(&self, var: usize) -> f64 {
        match self.layout {
            None => 0.0,
            Some(l) => {
                let mut e = vec![0u8; l.nvars];
                e[var] = 1;
                self.coeff(&e)
            }
        }
    }

    /// Second partial derivative at the expansion point.
    pub fn d2(&self, a: usize, b: usize) -> f64 {
        match self.layout {
            None => 0.0,
            Some(l) => {
                let mut e = vec![0u8; l.nvars];
                e[a] += 1;
                e[b] += 1;
                self.derivative(&e)
            }
        }
    }

    pub fn truncate(mut self, order: usize) -> Jet {
        if let Some(l) = self.layout {
            let n = l.len_for(order.min(l.order));
            if n < self.c.len() {
                self.c.truncate(n);
            }
        }
        self
    }

    /// ∂/∂δ_var as a jet of one lower order.
    pub fn diff(&self, var: usize) -> Jet {
        let l = match self.layout {
            None => return Jet::constant(0.0),
            Some(l) => l,
        };
        let ord = self.order();
        assert!(ord >= 1, "derivative of an order-0 jet");
        let mut c = vec![0.0; l.len_for(ord - 1)];
        let tbl = &l.deriv[var];
        for &(src, dst, f) in &tbl[..l.deriv_end[var][ord]] {
            c[dst as usize] += f * self.c[src as usize];
        }
        Jet { layout: Some(l), c }
    }

    /// Re-express a jet in a layout with at least as many variables; variable
    /// `v` of `self` becomes variable `map[v]` of the target.
    pub fn embed(&self, target: &'static Layout, map: &[usize]) -> Jet {
        let l = match self.layout {
            None => return self.clone(),
            Some(l) => l,
        };
        let ord = self.order().min(target.order);
        let mut c = vec![0.0; target.len_for(ord)];
        for (i, &v) in self.c.iter().enumerate().take(l.len_for(ord)) {
            let mut e = vec![0u8; target.nvars];
            for (k, &p) in l.exps[i].iter().enumerate() {
                e[map[k]] += p;
            }
            c[target.index_of(&e).unwrap()] += v;
        }
        Jet {
            layout: Some(target),
            c,
        }
    }

    /// Evaluate the polynomial at a displacement `δ`.
    pub fn eval_at(&self, delta: &[f64]) -> f64 {
        let l = match self.layout {
            None => return self.c[0],
            Some(l) => l,
        };
        self.c
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                v * l.exps[i]
                    .iter()
                    .zip(delta)
                    .map(|(&e, &d)| d.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// `φ(self)` from the normalized derivatives `taylor[k] = φ^(k)(a0)/k!`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let l = match self.layout {
            None => return Jet::constant(taylor[0]),
            Some(l) => l,
        };
        let ord = self.order();
        let mut h = self.clone();
        h.c[0] = 0.0;
        let top = ord.min(taylor.len() - 1);
        let mut out = Jet::constant_in(l, ord, taylor[top]);
        for k in (0..top).rev() {
            out = &out * &h;
            out.c[0] += taylor[k];
        }
        out
    }

    fn max_order(&self) -> usize {
        match self.layout {
            None => 0,
            Some(_) => self.order(),
        }
    }

    pub fn scale(mut self, s: f64) -> Jet {
        for v in &mut self.c {
            *v *= s;
        }
        self
    }

    pub fn abs_max(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Restriction to the slice where every variable with index ≥
    /// `target.nvars` is held at its expansion value.
    pub fn restrict(&self, target: &'static Layout) -> Jet {
        let l = match self.layout {
            None => return self.clone(),
            Some(l) => l,
        };
        let k = target.nvars;
        let ord = self.order().min(target.order);
        let mut c = vec![0.0; target.len_for(ord)];
        for (i, &v) in self.c.iter().enumerate().take(l.len_for(ord)) {
            let e = &l.exps[i];
            if e[k..].iter().any(|&p| p > 0) {
                continue;
            }
            c[target.index_of(&e[..k]).unwrap()] = v;
        }
        Jet {
            layout: Some(target),
            c,
        }
    }

    /// The polynomial evaluated at jet-valued displacements `δ_v = args[v]`
    /// (the arguments must have zero constant term for the truncation to be
    /// exact).
    pub fn substitute(&self, args: &[Jet]) -> Jet {
        let l = match self.layout {
            None => return self.clone(),
            Some(l) => l,
        };
        let ord = args
            .iter()
            .map(|a| a.order())
            .min()
            .unwrap_or(usize::MAX)
            .min(self.order());
        let top = self.order();
        // powers[v][p] = args[v]^p
        let powers: Vec<Vec<Jet>> = args
            .iter()
            .map(|a| {
                let a = a.clone().truncate(ord);
                let mut ps = vec![Jet::constant(1.0)];
                for p in 1..=top {
                    let next = &ps[p - 1] * &a;
                    ps.push(next);
                }
                ps
            })
            .collect();
        let mut acc = Jet::constant(0.0);
        for (i, &v) in self.c.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut term = Jet::constant(v);
            for (var, &p) in l.exps[i].iter().enumerate() {
                if p > 0 {
                    term = &term * &powers[var][p as usize];
                }
            }
            acc += &term;
        }
        acc
    }
}

fn same_layout(a: &Jet, b: &Jet) -> Option<&'static Layout> {
    match (a.layout, b.layout) {
        (None, None) => None,
        (Some(l), None) | (None, Some(l)) => Some(l),
        (Some(l1), Some(l2)) => {
            assert!(std::ptr::eq(l1, l2), "jets from different layouts combined");
            Some(l1)
        }
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, b: &Jet) -> Jet {
        self.clone() + b
    }
}

impl Add<&Jet> for Jet {
    type Output = Jet;
    fn add(mut self, b: &Jet) -> Jet {
        self += b;
        self
    }
}

impl Add<Jet> for Jet {
    type Output = Jet;
    fn add(self, b: Jet) -> Jet {
        if self.c.len() >= b.c.len() || self.is_constant() {
            self + &b
        } else {
            b + &self
        }
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, b: &Jet) {
        let l = same_layout(self, b);
        match (self.layout.is_none(), b.layout.is_none()) {
            (true, true) => self.c[0] += b.c[0],
            (false, true) => self.c[0] += b.c[0],
            (true, false) => {
                let v = self.c[0];
                *self = b.clone();
                self.c[0] += v;
            }
            (false, false) => {
                let n = self.c.len().min(b.c.len());
                self.c.truncate(n);
                for (x, y) in self.c.iter_mut().zip(&b.c) {
                    *x += y;
                }
            }
        }
        let _ = l;
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, b: Jet) {
        *self += &b;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, b: &Jet) {
        *self += &(-b.clone());
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, b: Jet) {
        *self += &(-b);
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, b: &Jet) -> Jet {
        self.clone() - b
    }
}

impl Sub<&Jet> for Jet {
    type Output = Jet;
    fn sub(mut self, b: &Jet) -> Jet {
        self -= b;
        self
    }
}

impl Sub<Jet> for Jet {
    type Output = Jet;
    fn sub(self, b: Jet) -> Jet {
        self + (-b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for v in &mut self.c {
            *v = -*v;
        }
        self
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, b: &Jet) -> Jet {
        match same_layout(self, b) {
            None => Jet::constant(self.c[0] * b.c[0]),
            Some(l) => {
                if self.is_constant() {
                    return b.clone().scale(self.c[0]);
                }
                if b.is_constant() {
                    return self.clone().scale(b.c[0]);
                }
                let ord = self.max_order().min(b.max_order());
                let mut c = vec![0.0; l.len_for(ord)];
                let end = l.mul_end[ord];
                let (a, bb) = (&self.c, &b.c);
                for t in 0..end {
                    let (i, j, k) = (
                        l.mul_i[t] as usize,
                        l.mul_j[t] as usize,
                        l.mul_k[t] as usize,
                    );
                    c[k] += a[i] * bb[j];
                }
                Jet { layout: Some(l), c }
            }
        }
    }
}

impl Mul<&Jet> for Jet {
    type Output = Jet;
    fn mul(self, b: &Jet) -> Jet {
        &self * b
    }
}

impl Mul<Jet> for Jet {
    type Output = Jet;
    fn mul(self, b: Jet) -> Jet {
        &self * &b
    }
}

impl MulAssign<&Jet> for Jet {
    fn mul_assign(&mut self, b: &Jet) {
        *self = &*self * b;
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn div(self, b: &Jet) -> Jet {
        self * &b.recip_jet()
    }
}

impl Div<Jet> for Jet {
    type Output = Jet;
    fn div(self, b: Jet) -> Jet {
        &self / &b
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, b: f64) -> Jet {
        self.c[0] += b;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, b: f64) -> Jet {
        self.c[0] -= b;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, b: f64) -> Jet {
        self.scale(b)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, b: f64) -> Jet {
        self.scale(1.0 / b)
    }
}

fn taylor_len(j: &Jet) -> usize {
    j.max_order() + 1
}

impl Jet {
    fn recip_jet(&self) -> Jet {
        let a = self.c[0];
        let n = taylor_len(self);
        // 1/x: coefficients (-1)^k / a^{k+1}
        let t: Vec<f64> = (0..n)
            .map(|k| (-1f64).powi(k as i32) / a.powi(k as i32 + 1))
            .collect();
        self.compose(&t)
    }
}

/// Scalar arithmetic shared by `f64`, [`Jet`] and [`Dual`].
pub trait Real:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    fn recip(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn asinh(self) -> Self;
    fn atan(self) -> Self;

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let base = if n < 0 { self.recip() } else { self };
        let mut out = base.clone();
        for _ in 1..n.unsigned_abs() {
            out = out * base.clone();
        }
        out
    }

    fn sq(self) -> Self {
        self.clone() * self
    }
}

impl Real for f64 {
    fn cst(v: f64) -> f64 {
        v
    }
    fn val(&self) -> f64 {
        *self
    }
    fn recip(self) -> f64 {
        1.0 / self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn sinh(self) -> f64 {
        f64::sinh(self)
    }
    fn cosh(self) -> f64 {
        f64::cosh(self)
    }
    fn asinh(self) -> f64 {
        f64::asinh(self)
    }
    fn atan(self) -> f64 {
        f64::atan(self)
    }
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
}

fn sin_cos_taylor(a: f64, n: usize, cosine: bool) -> Vec<f64> {
    let (s, c) = a.sin_cos();
    let cyc = if cosine {
        [c, -s, -c, s]
    } else {
        [s, c, -s, -c]
    };
    let mut fact = 1.0;
    (0..n)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            cyc[k % 4] / fact
        })
        .collect()
}

fn sqrt_taylor(a: f64, n: usize) -> Vec<f64> {
    // binomial series of a^{1/2}(1 + h/a)^{1/2}
    let mut out = Vec::with_capacity(n);
    let mut binom = 1.0;
    let r = a.sqrt();
    for k in 0..n {
        if k > 0 {
            binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
        }
        out.push(r * binom / a.powi(k as i32));
    }
    out
}

/// Taylor coefficients of `φ` from `φ(a)` and the univariate jet of `φ'`.
fn integrate_derivative(phi0: f64, dphi: &Jet) -> Vec<f64> {
    let mut out = vec![phi0];
    for k in 0..=dphi.order() {
        let mut e = vec![0u8; 1];
        e[0] = k as u8;
        out.push(dphi.coeff(&e) / (k as f64 + 1.0));
    }
    out
}

fn univariate(a: f64, order: usize) -> Jet {
    Jet::variable(Layout::get(1, order), order, 0, a)
}

impl Real for Jet {
    fn cst(v: f64) -> Jet {
        Jet::constant(v)
    }
    fn val(&self) -> f64 {
        self.c[0]
    }
    fn recip(self) -> Jet {
        self.recip_jet()
    }
    fn sqrt(self) -> Jet {
        let t = sqrt_taylor(self.c[0], taylor_len(&self));
        self.compose(&t)
    }
    fn exp(self) -> Jet {
        let e = self.c[0].exp();
        let mut fact = 1.0;
        let t: Vec<f64> = (0..taylor_len(&self))
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                e / fact
            })
            .collect();
        self.compose(&t)
    }
    fn ln(self) -> Jet {
        let a = self.c[0];
        let n = taylor_len(&self);
        let t: Vec<f64> = (0..n)
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    (-1f64).powi(k as i32 + 1) / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.compose(&t)
    }
    fn sin(self) -> Jet {
        let t = sin_cos_taylor(self.c[0], taylor_len(&self), false);
        self.compose(&t)
    }
    fn cos(self) -> Jet {
        let t = sin_cos_taylor(self.c[0], taylor_len(&self), true);
        self.compose(&t)
    }
    fn sinh(self) -> Jet {
        let (e, f) = (self.clone().exp(), (-self).exp());
        (e - f) * 0.5
    }
    fn cosh(self) -> Jet {
        let (e, f) = (self.clone().exp(), (-self).exp());
        (e + f) * 0.5
    }
    fn asinh(self) -> Jet {
        let a = self.c[0];
        let n = taylor_len(&self);
        if n == 1 {
            return self.compose(&[a.asinh()]);
        }
        // d/dx asinh = (1+x²)^{-1/2}
        let x = univariate(a, n - 2);
        let d = (x.clone() * x + 1.0).sqrt().recip();
        let t = integrate_derivative(a.asinh(), &d);
        self.compose(&t)
    }
    fn atan(self) -> Jet {
        let a = self.c[0];
        let n = taylor_len(&self);
        if n == 1 {
            return self.compose(&[a.atan()]);
        }
        let x = univariate(a, n - 2);
        let d = (x.clone() * x + 1.0).recip();
        let t = integrate_derivative(a.atan(), &d);
        self.compose(&t)
    }
}

/// Forward-mode first derivatives over any [`Real`] scalar.
#[derive(Clone, Debug)]
pub struct Dual<S> {
    pub v: S,
    pub g: Vec<S>,
}

impl<S: Real> Dual<S> {
    pub fn variable(x: S, idx: usize, n: usize) -> Dual<S> {
        let g = (0..n)
            .map(|k| S::cst(if k == idx { 1.0 } else { 0.0 }))
            .collect();
        Dual { v: x, g }
    }

    fn chain(self, f: S, df: S) -> Dual<S> {
        Dual {
            v: f,
            g: self.g.into_iter().map(|x| x * df.clone()).collect(),
        }
    }
}

fn zip_grad<S: Real>(a: Vec<S>, b: Vec<S>, f: impl Fn(S, S) -> S) -> Vec<S> {
    if a.is_empty() {
        return b.into_iter().map(|y| f(S::cst(0.0), y)).collect();
    }
    if b.is_empty() {
        return a.into_iter().map(|x| f(x, S::cst(0.0))).collect();
    }
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

impl<S: Real> Add for Dual<S> {
    type Output = Dual<S>;
    fn add(self, b: Dual<S>) -> Dual<S> {
        Dual {
            v: self.v + b.v,
            g: zip_grad(self.g, b.g, |x, y| x + y),
        }
    }
}

impl<S: Real> Sub for Dual<S> {
    type Output = Dual<S>;
    fn sub(self, b: Dual<S>) -> Dual<S> {
        Dual {
            v: self.v - b.v,
            g: zip_grad(self.g, b.g, |x, y| x - y),
        }
    }
}

impl<S: Real> Mul for Dual<S> {
    type Output = Dual<S>;
    fn mul(self, b: Dual<S>) -> Dual<S> {
        let (av, bv) = (self.v.clone(), b.v.clone());
        let g = zip_grad(self.g, b.g, |x, y| x * bv.clone() + y * av.clone());
        Dual { v: self.v * b.v, g }
    }
}

impl<S: Real> Div for Dual<S> {
    type Output = Dual<S>;
    fn div(self, b: Dual<S>) -> Dual<S> {
        self * b.recip()
    }
}

impl<S: Real> Neg for Dual<S> {
    type Output = Dual<S>;
    fn neg(self) -> Dual<S> {
        Dual {
            v: -self.v,
            g: self.g.into_iter().map(|x| -x).collect(),
        }
    }
}

impl<S: Real> Add<f64> for Dual<S> {
    type Output = Dual<S>;
    fn add(self, b: f64) -> Dual<S> {
        Dual {
            v: self.v + b,
            g: self.g,
        }
    }
}

impl<S: Real> Sub<f64> for Dual<S> {
    type Output = Dual<S>;
    fn sub(self, b: f64) -> Dual<S> {
        Dual {
            v: self.v - b,
            g: self.g,
        }
    }
}

impl<S: Real> Mul<f64> for Dual<S> {
    type Output = Dual<S>;
    fn mul(self, b: f64) -> Dual<S> {
        Dual {
            v: self.v * b,
            g: self.g.into_iter().map(|x| x * b).collect(),
        }
    }
}

impl<S: Real> Div<f64> for Dual<S> {
    type Output = Dual<S>;
    fn div(self, b: f64) -> Dual<S> {
        self * (1.0 / b)
    }
}

impl<S: Real> Real for Dual<S> {
    fn cst(v: f64) -> Dual<S> {
        Dual {
            v: S::cst(v),
            g: Vec::new(),
        }
    }
    fn val(&self) -> f64 {
        self.v.val()
    }
    fn recip(self) -> Dual<S> {
        let r = self.v.clone().recip();
        let d = -(r.clone() * r.clone());
        self.chain(r, d)
    }
    fn sqrt(self) -> Dual<S> {
        let s = self.v.clone().sqrt();
        let d = s.clone().recip() * 0.5;
        self.chain(s, d)
    }
    fn exp(self) -> Dual<S> {
        let e = self.v.clone().exp();
        self.chain(e.clone(), e)
    }
    fn ln(self) -> Dual<S> {
        let l = self.v.clone().ln();
        let d = self.v.clone().recip();
        self.chain(l, d)
    }
    fn sin(self) -> Dual<S> {
        let (s, c) = (self.v.clone().sin(), self.v.clone().cos());
        self.chain(s, c)
    }
    fn cos(self) -> Dual<S> {
        let (s, c) = (self.v.clone().sin(), self.v.clone().cos());
        self.chain(c, -s)
    }
    fn sinh(self) -> Dual<S> {
        let (s, c) = (self.v.clone().sinh(), self.v.clone().cosh());
        self.chain(s, c)
    }
    fn cosh(self) -> Dual<S> {
        let (s, c) = (self.v.clone().sinh(), self.v.clone().cosh());
        self.chain(c, s)
    }
    fn asinh(self) -> Dual<S> {
        let a = self.v.clone().asinh();
        let d = (self.v.clone() * self.v.clone() + 1.0).sqrt().recip();
        self.chain(a, d)
    }
    fn atan(self) -> Dual<S> {
        let a = self.v.clone().atan();
        let d = (self.v.clone() * self.v.clone() + 1.0).recip();
        self.chain(a, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn j2(order: usize, x: f64, y: f64) -> (Jet, Jet) {
        let l = Layout::get(2, order);
        (Jet::variable(l, order, 0, x), Jet::variable(l, order, 1, y))
    }

    #[test]
    fn layout_counts() {
        let l = Layout::get(3, 4);
        assert_eq!(l.len_for(4), 35);
        assert_eq!(l.len_for(0), 1);
        assert_eq!(l.exponents(0), &[0, 0, 0]);
    }

    #[test]
    fn product_of_polynomials_is_exact() {
        let (x, y) = j2(4, 0.0, 0.0);
        let p = (x.clone() + y.clone()) * (x.clone() - y.clone());
        assert_eq!(p.coeff(&[2, 0]), 1.0);
        assert_eq!(p.coeff(&[0, 2]), -1.0);
        assert_eq!(p.coeff(&[1, 1]), 0.0);
        let cube = x.clone() * x.clone() * x.clone() * y.clone() * y;
        // total degree 5 truncated away
        assert_eq!(cube.abs_max(), 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_derivatives() {
        let (x, y) = j2(4, 0.3, -0.7);
        let f = (x.clone() * y.clone()).sin() + (x.clone() * 2.0).exp() * y.clone().cos();
        // ∂x∂y of sin(xy) = cos(xy) - xy sin(xy); of e^{2x}cos y = -2 e^{2x} sin y
        let xy: f64 = 0.3 * -0.7;
        let want = xy.cos() - xy * xy.sin() - 2.0 * (0.6f64).exp() * (-0.7f64).sin();
        assert_relative_eq!(f.d2(0, 1), want, epsilon = 1e-13);
        let g = (x.clone() * x.clone() + 1.0).sqrt();
        // d⁴/dx⁴ sqrt(1+x²) = 3(4x²-1)/(1+x²)^{7/2} ... check via 4th derivative formula
        let a: f64 = 0.3;
        let d4 = (12.0 * a * a - 3.0) / (1.0 + a * a).powf(3.5);
        assert_relative_eq!(g.derivative(&[4, 0]), d4, epsilon = 1e-12);
        let h = x.clone().ln() * y.clone().atan() + x.asinh();
        let d3 =
            2.0 / (a * a * a) * (-0.7f64).atan() + (2.0 * a * a - 1.0) / (1.0 + a * a).powf(2.5);
        assert_relative_eq!(h.derivative(&[3, 0]), d3, epsilon = 1e-12);
    }

    #[test]
    fn diff_lowers_order_and_embed_remaps() {
        let (x, y) = j2(3, 1.0, 2.0);
        let f = x.clone() * x.clone() * y.clone();
        let fx = f.diff(0);
        assert_eq!(fx.order(), 2);
        assert_relative_eq!(fx.value(), 4.0);
        assert_relative_eq!(fx.d1(1), 2.0);
        let big = Layout::get(3, 3);
        let e = f.embed(big, &[2, 0]);
        assert_relative_eq!(e.d2(2, 2), 2.0 * 2.0);
        assert_relative_eq!(e.d1(0), 1.0);
    }

    #[test]
    fn dual_over_jet_gives_mixed_derivatives() {
        let l = Layout::get(1, 2);
        let t = Jet::variable(l, 2, 0, 0.5);
        let x = Dual::variable(t.clone() * 2.0, 0, 1);
        let f = (x.clone() * x).sin();
        // f = sin(x²) with x = 2t; df/dx = 2x cos(x²), as jet in t
        let df = f.g[0].clone();
        let xv: f64 = 1.0;
        assert_relative_eq!(df.value(), 2.0 * xv * (xv * xv).cos(), epsilon = 1e-14);
        // d/dt (2x cos x²) = 2·(2cos x² − 4x² sin x²)
        let want = 2.0 * (2.0 * (1.0f64).cos() - 4.0 * (1.0f64).sin());
        assert_relative_eq!(df.d1(0), want, epsilon = 1e-13);
    }

    #[test]
    fn restrict_and_substitute() {
        let l3 = Layout::get(3, 3);
        let l2 = Layout::get(2, 3);
        let x = Jet::variable(l3, 3, 0, 1.0);
        let t = Jet::variable(l3, 3, 2, 0.0);
        let f = (x.clone() * x.clone() + t.clone() * x).sin();
        let r = f.restrict(l2);
        let (xs, _) = j2(3, 1.0, 0.0);
        let want = (xs.clone() * xs).sin();
        for (a, b) in r.coeffs().iter().zip(want.coeffs()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        // compose p(δ) = exp(δ0) with δ0 = 2s + s² in a one-variable layout
        let (u, _) = j2(3, 0.0, 0.0);
        let p = u.exp();
        let l1 = Layout::get(1, 3);
        let s = Jet::variable(l1, 3, 0, 0.0);
        let arg = s.clone() * 2.0 + s.clone() * s.clone();
        let zero = Jet::constant_in(l1, 3, 0.0);
        let q = p.substitute(&[arg.clone(), zero]);
        let want = arg.exp();
        for (a, b) in q.coeffs().iter().zip(want.coeffs()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }
}
