//! Framework-free GRU inference from serialized weights.
//!
//! The recurrence is the standard gated recurrent unit:
//! `z = σ(W_z·x + U_z·h + b_z)`, `r = σ(W_r·x + U_r·h + b_r)`,
//! `h̃ = tanh(W_h·x + U_h·(r∘h) + b_h)`, `h ← (1−z)∘h + z∘h̃`,
//! starting from a zero hidden state, followed by an affine decoder. All
//! matrices are row-major; training happens elsewhere, this is inference
//! only.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Serialized GRU + affine decoder weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GruWeights {
    pub input_dim: usize,
    pub hidden_dim: usize,
    #[serde(rename = "W_z")]
    pub w_z: Vec<f64>,
    #[serde(rename = "W_r")]
    pub w_r: Vec<f64>,
    #[serde(rename = "W_h")]
    pub w_h: Vec<f64>,
    #[serde(rename = "U_z")]
    pub u_z: Vec<f64>,
    #[serde(rename = "U_r")]
    pub u_r: Vec<f64>,
    #[serde(rename = "U_h")]
    pub u_h: Vec<f64>,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
    #[serde(rename = "b_r")]
    pub b_r: Vec<f64>,
    #[serde(rename = "b_h")]
    pub b_h: Vec<f64>,
    #[serde(rename = "decoder_W")]
    pub decoder_w: Vec<f64>,
    #[serde(rename = "decoder_b")]
    pub decoder_b: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `y = W·x + U·h + b` for row-major `W (hidden×input)`, `U (hidden×hidden)`.
fn affine(
    w: &[f64],
    u: &[f64],
    b: &[f64],
    x: &[f64],
    h: &[f64],
    out: &mut [f64],
) {
    let (input, hidden) = (x.len(), h.len());
    for i in 0..hidden {
        let mut acc = b[i];
        let wr = &w[i * input..(i + 1) * input];
        for (wv, xv) in wr.iter().zip(x) {
            acc += wv * xv;
        }
        let ur = &u[i * hidden..(i + 1) * hidden];
        for (uv, hv) in ur.iter().zip(h) {
            acc += uv * hv;
        }
        out[i] = acc;
    }
}

impl GruWeights {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let w: GruWeights = serde_json::from_str(&raw)?;
        w.validate()?;
        Ok(w)
    }

    pub fn output_dim(&self) -> usize {
        self.decoder_b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.decoder_b.len());
        if i == 0 || h == 0 || o == 0 {
            return Err(Error::Weights("zero-sized GRU dimension".into()));
        }
        let checks: [(&str, usize, usize); 10] = [
            ("W_z", self.w_z.len(), h * i),
            ("W_r", self.w_r.len(), h * i),
            ("W_h", self.w_h.len(), h * i),
            ("U_z", self.u_z.len(), h * h),
            ("U_r", self.u_r.len(), h * h),
            ("U_h", self.u_h.len(), h * h),
            ("b_z", self.b_z.len(), h),
            ("b_r", self.b_r.len(), h),
            ("b_h", self.b_h.len(), h),
            ("decoder_W", self.decoder_w.len(), o * h),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Weights(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        Ok(())
    }

    /// Run the recurrence over `inputs` (oldest first) from a zero hidden
    /// state and decode the final hidden state.
    pub fn run(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.validate()?;
        if inputs.is_empty() {
            return Err(Error::Weights("empty input sequence".into()));
        }
        let hidden = self.hidden_dim;
        let mut h = vec![0.0; hidden];
        let mut z = vec![0.0; hidden];
        let mut r = vec![0.0; hidden];
        let mut cand = vec![0.0; hidden];
        let mut rh = vec![0.0; hidden];
        for x in inputs {
            if x.len() != self.input_dim {
                return Err(Error::Weights(format!(
                    "input has {} features, weights expect {}",
                    x.len(),
                    self.input_dim
                )));
            }
            affine(&self.w_z, &self.u_z, &self.b_z, x, &h, &mut z);
            affine(&self.w_r, &self.u_r, &self.b_r, x, &h, &mut r);
            for i in 0..hidden {
                z[i] = sigmoid(z[i]);
                r[i] = sigmoid(r[i]);
                rh[i] = r[i] * h[i];
            }
            affine(&self.w_h, &self.u_h, &self.b_h, x, &rh, &mut cand);
            for i in 0..hidden {
                h[i] = (1.0 - z[i]) * h[i] + z[i] * cand[i].tanh();
            }
        }
        let mut out = self.decoder_b.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.decoder_w[i * hidden..(i + 1) * hidden];
            for (w, hv) in row.iter().zip(&h) {
                *o += w * hv;
            }
        }
        Ok(out)
    }

    /// All-zero weights of the given shape (useful as a template).
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        GruWeights {
            input_dim,
            hidden_dim,
            w_z: vec![0.0; hidden_dim * input_dim],
            w_r: vec![0.0; hidden_dim * input_dim],
            w_h: vec![0.0; hidden_dim * input_dim],
            u_z: vec![0.0; hidden_dim * hidden_dim],
            u_r: vec![0.0; hidden_dim * hidden_dim],
            u_h: vec![0.0; hidden_dim * hidden_dim],
            b_z: vec![0.0; hidden_dim],
            b_r: vec![0.0; hidden_dim],
            b_h: vec![0.0; hidden_dim],
            decoder_w: vec![0.0; output_dim * hidden_dim],
            decoder_b: vec![0.0; output_dim],
        }
    }
}
