//! Single-layer LSTM with backpropagation through time.
//!
//! All four gates share one weight matrix of shape `4H x (H + I)`, rows in
//! gate order forget, input, candidate, output; columns `[h_{t-1} | x_t]`.

use rand::Rng;

use super::{axpy, debug_check_finite, dot, sigmoid, NeuralError, ParamId, ParamSet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lstm {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Activations saved by [`Lstm::forward_seq`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    pub steps: usize,
    /// `(steps + 1) x H`, row 0 is the initial state.
    pub h: Vec<T>,
    pub c: Vec<T>,
    /// `steps x 4H`, post-activation gate values.
    pub gates: Vec<T>,
}

impl<T: Scalar> LstmCache<T> {
    pub fn hidden_at(&self, t: usize, hidden: usize) -> &[T] {
        &self.h[(t + 1) * hidden..(t + 2) * hidden]
    }

    pub fn final_hidden(&self, hidden: usize) -> &[T] {
        &self.h[self.steps * hidden..(self.steps + 1) * hidden]
    }

    pub fn final_cell(&self, hidden: usize) -> &[T] {
        &self.c[self.steps * hidden..(self.steps + 1) * hidden]
    }
}

/// Gradients of one sequence; reduced by the caller in a fixed order.
#[derive(Debug, Clone)]
pub struct LstmGrads<T> {
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub dx: Vec<T>,
    pub dh0: Vec<T>,
    pub dc0: Vec<T>,
}

impl Lstm {
    pub fn new<T: Scalar>(ps: &mut ParamSet<T>, prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden.max(1) as f64).sqrt();
        let w = ps.add_uniform(&format!("{prefix}.w"), &[4 * hidden, hidden + input], bound, rng);
        let b = ps.add_uniform(&format!("{prefix}.b"), &[4 * hidden], bound, rng);
        Self { w, b, input, hidden }
    }

    pub fn attach<T: Scalar>(ps: &ParamSet<T>, prefix: &str, input: usize, hidden: usize) -> Result<Self, NeuralError> {
        let find = |n: &str| ps.find(n).ok_or_else(|| NeuralError::ShapeMismatch(format!("missing parameter {n}")));
        Ok(Self { w: find(&format!("{prefix}.w"))?, b: find(&format!("{prefix}.b"))?, input, hidden })
    }

    fn width(&self) -> usize {
        self.hidden + self.input
    }

    /// One recurrence step from explicit state. Returns `(h_t, c_t, gates)`.
    pub fn step<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], h: &[T], c: &[T]) -> Result<(Vec<T>, Vec<T>, Vec<T>), NeuralError> {
        if x.len() != self.input || h.len() != self.hidden || c.len() != self.hidden {
            return Err(NeuralError::ShapeMismatch(format!("lstm step expects input {} and state {}", self.input, self.hidden)));
        }
        let (hd, wd) = (self.hidden, self.width());
        let w = ps.value(self.w);
        let b = ps.value(self.b);
        let mut z = vec![T::zero(); 4 * hd];
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &w[r * wd..(r + 1) * wd];
            *zr = dot(&row[..hd], h) + dot(&row[hd..], x) + b[r];
        }
        Ok(self.activate(&z, c))
    }

    fn activate<T: Scalar>(&self, z: &[T], c_prev: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let hd = self.hidden;
        let mut gates = vec![T::zero(); 4 * hd];
        let mut h = vec![T::zero(); hd];
        let mut c = vec![T::zero(); hd];
        for j in 0..hd {
            let f = sigmoid(z[j]);
            let i = sigmoid(z[hd + j]);
            let g = z[2 * hd + j].tanh();
            let o = sigmoid(z[3 * hd + j]);
            c[j] = f * c_prev[j] + i * g;
            h[j] = o * c[j].tanh();
            gates[j] = f;
            gates[hd + j] = i;
            gates[2 * hd + j] = g;
            gates[3 * hd + j] = o;
        }
        (h, c, gates)
    }

    /// Runs the whole sequence `x` (`steps x I`, row-major) from `(h0, c0)`,
    /// zeros when `None`.
    pub fn forward_seq<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], h0: Option<&[T]>, c0: Option<&[T]>) -> Result<LstmCache<T>, NeuralError> {
        let (hd, id, wd) = (self.hidden, self.input, self.width());
        if id == 0 || x.len() % id != 0 {
            return Err(NeuralError::ShapeMismatch(format!("lstm input of {} values is not a multiple of {}", x.len(), id)));
        }
        let steps = x.len() / id;
        for s in [h0, c0].into_iter().flatten() {
            if s.len() != hd {
                return Err(NeuralError::ShapeMismatch(format!("initial state of {} values, hidden is {}", s.len(), hd)));
            }
        }
        let w = ps.value(self.w);
        let b = ps.value(self.b);
        let mut h = vec![T::zero(); (steps + 1) * hd];
        let mut c = vec![T::zero(); (steps + 1) * hd];
        if let Some(h0) = h0 {
            h[..hd].copy_from_slice(h0);
        }
        if let Some(c0) = c0 {
            c[..hd].copy_from_slice(c0);
        }
        // input contribution for every step up front
        let mut zx = vec![T::zero(); steps * 4 * hd];
        for t in 0..steps {
            let xt = &x[t * id..(t + 1) * id];
            for r in 0..4 * hd {
                zx[t * 4 * hd + r] = dot(&w[r * wd + hd..(r + 1) * wd], xt) + b[r];
            }
        }
        let mut gates = vec![T::zero(); steps * 4 * hd];
        let mut z = vec![T::zero(); 4 * hd];
        for t in 0..steps {
            let hp = &h[t * hd..(t + 1) * hd];
            for r in 0..4 * hd {
                z[r] = zx[t * 4 * hd + r] + dot(&w[r * wd..r * wd + hd], hp);
            }
            let (hn, cn, g) = self.activate(&z, &c[t * hd..(t + 1) * hd]);
            h[(t + 1) * hd..(t + 2) * hd].copy_from_slice(&hn);
            c[(t + 1) * hd..(t + 2) * hd].copy_from_slice(&cn);
            gates[t * 4 * hd..(t + 1) * 4 * hd].copy_from_slice(&g);
        }
        debug_check_finite("lstm hidden", &h);
        Ok(LstmCache { steps, h, c, gates })
    }

    /// BPTT. `dh` holds `dL/dh_t` for every step (`steps x H`); `dc_last` is an
    /// optional extra gradient on the final cell state.
    pub fn backward<T: Scalar>(&self, ps: &ParamSet<T>, x: &[T], cache: &LstmCache<T>, dh: &[T], dc_last: Option<&[T]>) -> LstmGrads<T> {
        let (hd, id, wd) = (self.hidden, self.input, self.width());
        let steps = cache.steps;
        debug_assert_eq!(dh.len(), steps * hd);
        let w = ps.value(self.w);
        let mut gw = vec![T::zero(); 4 * hd * wd];
        let mut gb = vec![T::zero(); 4 * hd];
        let mut dx = vec![T::zero(); steps * id];
        let mut dh_next = vec![T::zero(); hd];
        let mut dc_next = dc_last.map(|d| d.to_vec()).unwrap_or_else(|| vec![T::zero(); hd]);
        let mut dz = vec![T::zero(); 4 * hd];
        let mut dhx = vec![T::zero(); wd];
        let mut hx = vec![T::zero(); wd];
        let one = T::one();
        for t in (0..steps).rev() {
            let g = &cache.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let c_prev = &cache.c[t * hd..(t + 1) * hd];
            let c_t = &cache.c[(t + 1) * hd..(t + 2) * hd];
            for j in 0..hd {
                let (f, i, cand, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
                let dht = dh[t * hd + j] + dh_next[j];
                let tc = c_t[j].tanh();
                let dc = dc_next[j] + dht * o * (one - tc * tc);
                dz[j] = dc * c_prev[j] * f * (one - f);
                dz[hd + j] = dc * cand * i * (one - i);
                dz[2 * hd + j] = dc * i * (one - cand * cand);
                dz[3 * hd + j] = dht * tc * o * (one - o);
                dc_next[j] = dc * f;
            }
            hx[..hd].copy_from_slice(&cache.h[t * hd..(t + 1) * hd]);
            hx[hd..].copy_from_slice(&x[t * id..(t + 1) * id]);
            dhx.iter_mut().for_each(|v| *v = T::zero());
            for r in 0..4 * hd {
                let d = dz[r];
                if d != T::zero() {
                    axpy(&mut gw[r * wd..(r + 1) * wd], d, &hx);
                    axpy(&mut dhx, d, &w[r * wd..(r + 1) * wd]);
                }
                gb[r] = gb[r] + d;
            }
            dh_next.copy_from_slice(&dhx[..hd]);
            dx[t * id..(t + 1) * id].copy_from_slice(&dhx[hd..]);
        }
        LstmGrads { w: gw, b: gb, dx, dh0: dh_next, dc0: dc_next }
    }

    pub fn accumulate<T: Scalar>(&self, ps: &mut ParamSet<T>, g: &LstmGrads<T>) {
        axpy(ps.grad_mut(self.w), T::one(), &g.w);
        axpy(ps.grad_mut(self.b), T::one(), &g.b);
    }
}
