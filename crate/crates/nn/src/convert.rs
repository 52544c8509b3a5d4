use candle_core::{DType, Device, Result, Tensor};
use ndarray::Array3;

pub fn array3_to_tensor(a: &Array3<f64>, dtype: DType, device: &Device) -> Result<Tensor> {
    let data: Vec<f64> = a.iter().copied().collect();
    Tensor::from_vec(data, a.dim(), device)?.to_dtype(dtype)
}

pub fn slice_to_tensor(data: &[f64], shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    Tensor::from_slice(data, shape, device)?.to_dtype(dtype)
}

pub fn tensor_to_array3(t: &Tensor) -> Result<Array3<f64>> {
    let (n, l, d) = t.dims3()?;
    let data = t.to_dtype(DType::F64)?.flatten_all()?.to_vec1::<f64>()?;
    Ok(Array3::from_shape_vec((n, l, d), data).expect("tensor length matches dims"))
}

pub fn scalar(t: &Tensor) -> Result<f64> {
    t.to_dtype(DType::F64)?.to_scalar::<f64>()
}
