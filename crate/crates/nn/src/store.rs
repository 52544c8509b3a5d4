use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Device, Result, Tensor, Var};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal, Uniform};
use tsgb_core::rng::Rng;

/// Named, ordered collection of trainable variables with seeded initialization.
pub struct ParamStore {
    vars: Vec<(String, Var)>,
    rng: Rng,
    dtype: DType,
    device: Device,
}

impl std::fmt::Debug for ParamStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamStore")
            .field("n_vars", &self.vars.len())
            .field("n_params", &self.n_params())
            .field("dtype", &self.dtype)
            .finish()
    }
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType, device: Device) -> Self {
        Self {
            vars: Vec::new(),
            rng: Rng::seed_from_u64(seed),
            dtype,
            device,
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn named_vars(&self) -> &[(String, Var)] {
        &self.vars
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn n_params(&self) -> usize {
        self.vars.iter().map(|(_, v)| v.elem_count()).sum()
    }

    fn insert(&mut self, name: String, data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        assert!(
            self.get(&name).is_none(),
            "duplicate parameter name '{name}'"
        );
        let t = Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.vars.push((name, var));
        Ok(out)
    }

    pub fn uniform(&mut self, name: impl Into<String>, shape: &[usize], bound: f64) -> Result<Tensor> {
        let n = shape.iter().product();
        let data = if bound > 0.0 {
            let dist = Uniform::new_inclusive(-bound, bound).expect("valid bound");
            (0..n).map(|_| dist.sample(&mut self.rng)).collect()
        } else {
            vec![0.0; n]
        };
        self.insert(name.into(), data, shape)
    }

    pub fn normal(&mut self, name: impl Into<String>, shape: &[usize], std: f64) -> Result<Tensor> {
        let n = shape.iter().product();
        let dist = Normal::new(0.0, std).expect("valid std");
        let data = (0..n).map(|_| dist.sample(&mut self.rng)).collect();
        self.insert(name.into(), data, shape)
    }

    pub fn constant(&mut self, name: impl Into<String>, shape: &[usize], value: f64) -> Result<Tensor> {
        let n = shape.iter().product();
        self.insert(name.into(), vec![value; n], shape)
    }

    /// Deep copy of every variable's current value.
    pub fn snapshot(&self) -> Result<Vec<Tensor>> {
        self.vars.iter().map(|(_, v)| v.as_tensor().copy()).collect()
    }

    pub fn restore(&self, snapshot: &[Tensor]) -> Result<()> {
        assert_eq!(snapshot.len(), self.vars.len(), "snapshot size mismatch");
        for ((_, var), t) in self.vars.iter().zip(snapshot) {
            var.set(t)?;
        }
        Ok(())
    }

    /// Overwrites one variable (used by tests to construct analytic cases).
    pub fn set(&self, name: &str, value: &Tensor) -> Result<()> {
        let var = self
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"));
        var.set(&value.to_dtype(self.dtype)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let map: HashMap<String, Tensor> = self
            .vars
            .iter()
            .map(|(n, v)| (n.clone(), v.as_tensor().clone()))
            .collect();
        candle_core::safetensors::save(&map, path)
    }

    /// Loads values saved by [`ParamStore::save`] into an identically-built store.
    pub fn load(&self, path: impl AsRef<Path>) -> Result<()> {
        let map = candle_core::safetensors::load(path, &self.device)?;
        for (name, var) in &self.vars {
            let t = map
                .get(name)
                .ok_or_else(|| candle_core::Error::Msg(format!("checkpoint lacks '{name}'")))?;
            if t.dims() != var.dims() {
                return Err(candle_core::Error::Msg(format!(
                    "checkpoint shape {:?} for '{name}', expected {:?}",
                    t.dims(),
                    var.dims()
                )));
            }
            var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }
}
