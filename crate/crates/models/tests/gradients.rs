//! Automatic gradients of every model loss against central differences.

use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use tsgb_core::rng::Rng;
use tsgb_models::*;

const REL_TOL: f64 = 1e-3;

fn check(store: &tsgb_nn::ParamStore, loss: impl Fn() -> Result<Tensor>) {
    let report = gradcheck(store, loss, 6, 1e-6, 1e-6).unwrap();
    assert!(report.checked > 10);
    assert!(
        report.max_rel_error <= REL_TOL,
        "max relative error {} at {:?}",
        report.max_rel_error,
        report.worst
    );
}

fn geometry() -> Geometry {
    Geometry::new(4, 2)
}

fn data(rng: &mut Rng, n: usize) -> Tensor {
    randn(rng, &[n, 4, 2], DType::F64, &Device::Cpu).unwrap()
}

fn classes(labels: &[u32]) -> CondBatch {
    CondBatch::Class(Tensor::new(labels, &Device::Cpu).unwrap())
}

#[test]
fn vae_elbo() {
    let cfg = VaeConfig {
        latent: 3,
        hidden: vec![8, 8],
        cond_width: 8,
        ..Default::default()
    };
    let vae = Vae::new(cfg, geometry(), &ConditionSpec::Class { n_classes: 2 }, 1, DType::F64).unwrap();
    let mut rng = Rng::seed_from_u64(0);
    let x = data(&mut rng, 5);
    let eps = randn(&mut rng, &[5, 3], DType::F64, &Device::Cpu).unwrap();
    let cond = classes(&[0, 1, 1, 0, 1]);
    check(vae.store(), || vae.loss(&x, &cond, &eps));
}

#[test]
fn wgan_critic_and_generator() {
    let cfg = GanConfig {
        noise_dim: 4,
        hidden: vec![8, 8],
        critic_hidden: vec![8, 8],
        cond_width: 8,
        ..Default::default()
    };
    let spec = ConditionSpec::History { length: 3 };
    let gan = Gan::new(cfg, geometry(), &spec, 2, DType::F64).unwrap();
    let mut rng = Rng::seed_from_u64(1);
    let real = data(&mut rng, 6).flatten_from(1).unwrap();
    let noise = randn(&mut rng, &[6, 4], DType::F64, &Device::Cpu).unwrap();
    let interp = rand_uniform(&mut rng, &[6, 1], DType::F64, &Device::Cpu).unwrap();
    let cond = CondBatch::History(randn(&mut rng, &[6, 3, 2], DType::F64, &Device::Cpu).unwrap());
    check(gan.store(), || {
        let fake = gan.generate(&noise, &cond)?;
        Ok(gan.losses(&real, &fake, &cond, &interp)?.critic)
    });
    check(gan.store(), || {
        let fake = gan.generate(&noise, &cond)?;
        Ok(gan.losses(&real, &fake, &cond, &interp)?.generator)
    });
}

fn ddpm(prediction: Prediction, spec: &ConditionSpec) -> Ddpm {
    let cfg = DdpmConfig {
        n_steps: 100,
        width: 8,
        depth: 2,
        heads: 2,
        mlp_ratio: 2,
        zero_init: false,
        prediction,
        ..Default::default()
    };
    Ddpm::new(cfg, geometry(), spec, 3, DType::F64).unwrap()
}

#[test]
fn ddpm_denoising_loss() {
    for prediction in [Prediction::Epsilon, Prediction::X0] {
        let m = ddpm(prediction, &ConditionSpec::Class { n_classes: 3 });
        let mut rng = Rng::seed_from_u64(2);
        let x0 = data(&mut rng, 3);
        let eps = data(&mut rng, 3);
        let cond = classes(&[2, 0, 1]);
        check(m.store(), || m.loss_with(&x0, &cond, &[5, 50, 99], &eps));
    }
}

#[test]
fn ddpm_masked_condition() {
    let m = ddpm(Prediction::Epsilon, &ConditionSpec::Mask);
    let mut rng = Rng::seed_from_u64(3);
    let x0 = data(&mut rng, 3);
    let eps = data(&mut rng, 3);
    let mask = rand_uniform(&mut rng, &[3, 4, 2], DType::F64, &Device::Cpu)
        .unwrap()
        .ge(0.3)
        .unwrap()
        .to_dtype(DType::F64)
        .unwrap();
    let cond = CondBatch::Masked {
        observed: (&x0 * &mask).unwrap(),
        mask,
    };
    check(m.store(), || m.loss_with(&x0, &cond, &[1, 20, 70], &eps));
}

#[test]
fn maf_nll() {
    let cfg = MafConfig {
        n_layers: 3,
        hidden: vec![8, 8],
        cond_width: 8,
        identity_init: false,
        ..Default::default()
    };
    let maf = Maf::new(cfg, geometry(), &ConditionSpec::Class { n_classes: 2 }, 4, DType::F64).unwrap();
    let mut rng = Rng::seed_from_u64(4);
    let x = data(&mut rng, 5);
    let cond = classes(&[1, 0, 0, 1, 1]);
    check(maf.store(), || maf.nll_per_dim(&x, &cond));
}
