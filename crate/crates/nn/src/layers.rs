use candle_core::{Result, Tensor, D};

use crate::ops;
use crate::store::ParamStore;

/// Affine map `x W^T + b` over the last dimension.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Linear {
    /// Uniform init on `±1/sqrt(fan_in)` for weight and bias.
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let weight = store.uniform(format!("{name}.weight"), &[fan_out, fan_in], bound)?;
        let bias = store.uniform(format!("{name}.bias"), &[fan_out], bound)?;
        Ok(Self {
            weight,
            bias: Some(bias),
        })
    }

    pub fn zeros(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        let weight = store.constant(format!("{name}.weight"), &[fan_out, fan_in], 0.0)?;
        let bias = store.constant(format!("{name}.bias"), &[fan_out], 0.0)?;
        Ok(Self {
            weight,
            bias: Some(bias),
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let wt = self.weight.t()?;
        let out = match xs.rank() {
            2 => xs.matmul(&wt)?,
            _ => {
                // fold leading axes into one matrix product
                let dims = xs.dims().to_vec();
                let rows: usize = dims[..dims.len() - 1].iter().product();
                let flat = xs.reshape((rows, dims[dims.len() - 1]))?.matmul(&wt)?;
                let mut out_dims = dims;
                *out_dims.last_mut().expect("rank > 2") = self.fan_out();
                flat.reshape(out_dims)?
            }
        };
        match &self.bias {
            Some(b) => out.broadcast_add(b),
            None => Ok(out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Silu,
    Tanh,
    Gelu,
}

impl Activation {
    pub fn apply(&self, xs: &Tensor) -> Result<Tensor> {
        match self {
            Self::Relu => xs.relu(),
            Self::LeakyRelu(s) => ops::leaky_relu(xs, *s),
            Self::Silu => ops::silu(xs),
            Self::Tanh => xs.tanh(),
            Self::Gelu => xs.gelu_erf(),
        }
    }
}

/// Stack of linear layers with an activation between consecutive layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl Mlp {
    /// `dims = [in, h1, ..., out]`; no activation after the last layer.
    pub fn new(store: &mut ParamStore, name: &str, dims: &[usize], activation: Activation) -> Result<Self> {
        assert!(dims.len() >= 2, "an MLP needs input and output widths");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(Self { layers, activation })
    }

    pub fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let mut h = xs.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if i < last {
                h = self.activation.apply(&h)?;
            }
        }
        Ok(h)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: Tensor,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, rows: usize, width: usize) -> Result<Self> {
        Ok(Self {
            table: store.normal(format!("{name}.table"), &[rows, width], 1.0)?,
        })
    }

    pub fn rows(&self) -> usize {
        self.table.dims()[0]
    }

    pub fn width(&self) -> usize {
        self.table.dims()[1]
    }

    /// `ids` is a u32 tensor of shape `[n]`.
    pub fn forward(&self, ids: &Tensor) -> Result<Tensor> {
        self.table.index_select(ids, 0)
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub weight: Option<Tensor>,
    pub bias: Option<Tensor>,
    eps: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, width: usize) -> Result<Self> {
        Ok(Self {
            weight: Some(store.constant(format!("{name}.weight"), &[width], 1.0)?),
            bias: Some(store.constant(format!("{name}.bias"), &[width], 0.0)?),
            eps: 1e-5,
        })
    }

    /// Normalization without learned affine parameters.
    pub fn plain() -> Self {
        Self {
            weight: None,
            bias: None,
            eps: 1e-6,
        }
    }

    pub fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let mean = xs.mean_keepdim(D::Minus1)?;
        let centered = xs.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let mut out = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        if let Some(w) = &self.weight {
            out = out.broadcast_mul(w)?;
        }
        if let Some(b) = &self.bias {
            out = out.broadcast_add(b)?;
        }
        Ok(out)
    }
}

/// Single-layer GRU over `[B, T, in]` sequences.
#[derive(Debug, Clone)]
pub struct Gru {
    input: Linear,
    hidden: Linear,
    width: usize,
}

impl Gru {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, width: usize) -> Result<Self> {
        let bound = 1.0 / (width as f64).sqrt();
        let mk = |store: &mut ParamStore, part: &str, fan_in: usize| -> Result<Linear> {
            Ok(Linear {
                weight: store.uniform(format!("{name}.{part}.weight"), &[3 * width, fan_in], bound)?,
                bias: Some(store.uniform(format!("{name}.{part}.bias"), &[3 * width], bound)?),
            })
        };
        Ok(Self {
            input: mk(store, "ih", in_dim)?,
            hidden: mk(store, "hh", width)?,
            width,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Returns the hidden state at every step, `[B, T, width]`.
    pub fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let (b, t, _) = xs.dims3()?;
        let w = self.width;
        let gates_x = self.input.forward(xs)?;
        let mut h = Tensor::zeros((b, w), xs.dtype(), xs.device())?;
        let mut outputs = Vec::with_capacity(t);
        for step in 0..t {
            let gx = gates_x.narrow(1, step, 1)?.squeeze(1)?;
            let gh = self.hidden.forward(&h)?;
            let r = ops::sigmoid(&(gx.narrow(1, 0, w)? + gh.narrow(1, 0, w)?)?)?;
            let z = ops::sigmoid(&(gx.narrow(1, w, w)? + gh.narrow(1, w, w)?)?)?;
            let n = (gx.narrow(1, 2 * w, w)? + r.mul(&gh.narrow(1, 2 * w, w)?)?)?.tanh()?;
            // h' = (1 - z) n + z h = n + z (h - n)
            h = (&n + z.mul(&(&h - &n)?)?)?;
            outputs.push(h.clone());
        }
        Tensor::stack(&outputs, 1)
    }
}

/// 1-D convolution with "same" padding over `[B, C, L]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    weight: Tensor,
    bias: Tensor,
    dilation: usize,
    kernel: usize,
}

impl Conv1d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        dilation: usize,
    ) -> Result<Self> {
        let bound = 1.0 / ((in_ch * kernel) as f64).sqrt();
        Ok(Self {
            weight: store.uniform(format!("{name}.weight"), &[out_ch, in_ch, kernel], bound)?,
            bias: store.uniform(format!("{name}.bias"), &[out_ch], bound)?,
            dilation,
            kernel,
        })
    }

    pub fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let reach = self.dilation * (self.kernel - 1);
        let left = reach / 2;
        let xs = xs.pad_with_zeros(2, left, reach - left)?;
        let out = xs.conv1d(&self.weight, 0, 1, self.dilation, 1)?;
        out.broadcast_add(&self.bias.reshape((1, (), 1))?)
    }
}
