//! Weight file container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "SBW1" | version u32 | tensor count u32
//! per tensor: name (u32 length + UTF-8) | ndim u8 | dims u32 * ndim | f32 payload
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::NeuralError;
use crate::layer::{Activation, Dense};
use crate::mlp::Mlp;

pub const MAGIC: &[u8; 4] = b"SBW1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn from_slice(name: impl Into<String>, dims: &[usize], values: &[f64]) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        NamedTensor {
            name: name.into(),
            dims: dims.iter().map(|&d| d as u32).collect(),
            data: values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_array2(name: impl Into<String>, a: &Array2<f64>) -> Self {
        let (r, c) = a.dim();
        let values: Vec<f64> = a.iter().copied().collect();
        Self::from_slice(name, &[r, c], &values)
    }

    pub fn from_array1(name: impl Into<String>, a: &Array1<f64>) -> Self {
        let values: Vec<f64> = a.iter().copied().collect();
        Self::from_slice(name, &[a.len()], &values)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn to_array2(&self) -> Result<Array2<f64>, NeuralError> {
        if self.dims.len() != 2 {
            return Err(NeuralError::shape("2 dims", format!("{:?}", self.dims)));
        }
        Array2::from_shape_vec((self.dims[0] as usize, self.dims[1] as usize), self.to_vec())
            .map_err(|e| NeuralError::Format(e.to_string()))
    }

    pub fn to_array1(&self) -> Result<Array1<f64>, NeuralError> {
        if self.dims.len() != 1 {
            return Err(NeuralError::shape("1 dim", format!("{:?}", self.dims)));
        }
        Ok(Array1::from_vec(self.to_vec()))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightFile {
    pub tensors: Vec<NamedTensor>,
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N], NeuralError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| NeuralError::Format(format!("truncated: {e}")))?;
    Ok(buf)
}

impl WeightFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: NamedTensor) {
        self.tensors.retain(|x| x.name != t.name);
        self.tensors.push(t);
    }

    pub fn get(&self, name: &str) -> Result<&NamedTensor, NeuralError> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| NeuralError::MissingTensor(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|t| t.name.as_str())
    }

    /// Appends `weight`/`bias` tensors for every layer under `prefix/<i>/`.
    pub fn push_mlp(&mut self, prefix: &str, net: &Mlp) {
        for (i, layer) in net.layers.iter().enumerate() {
            self.push(NamedTensor::from_array2(format!("{prefix}/{i}/weight"), &layer.weight));
            self.push(NamedTensor::from_array1(format!("{prefix}/{i}/bias"), &layer.bias));
        }
    }

    /// Reads back an MLP written by [`WeightFile::push_mlp`]; activations
    /// are not stored and must be supplied.
    pub fn read_mlp(
        &self,
        prefix: &str,
        activations: &[Activation],
    ) -> Result<Mlp, NeuralError> {
        let layers = activations
            .iter()
            .enumerate()
            .map(|(i, &activation)| {
                let weight = self.get(&format!("{prefix}/{i}/weight"))?.to_array2()?;
                let bias = self.get(&format!("{prefix}/{i}/bias"))?.to_array1()?;
                if bias.len() != weight.nrows() {
                    return Err(NeuralError::shape(weight.nrows(), bias.len()));
                }
                Ok(Dense {
                    weight,
                    bias,
                    activation,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(NeuralError::shape(pair[0].output_dim(), pair[1].input_dim()));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), NeuralError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            let name = t.name.as_bytes();
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name)?;
            w.write_all(&[t.dims.len() as u8])?;
            for d in &t.dims {
                w.write_all(&d.to_le_bytes())?;
            }
            let mut payload = Vec::with_capacity(t.data.len() * 4);
            for v in &t.data {
                payload.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&payload)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, NeuralError> {
        let magic: [u8; 4] = read_exact(r)?;
        if &magic != MAGIC {
            return Err(NeuralError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_exact(r)?);
        if version != VERSION {
            return Err(NeuralError::Format(format!("unsupported version {version}")));
        }
        let count = u32::from_le_bytes(read_exact(r)?);
        let mut tensors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = u32::from_le_bytes(read_exact(r)?) as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)
                .map_err(|e| NeuralError::Format(format!("truncated name: {e}")))?;
            let name = String::from_utf8(name)
                .map_err(|_| NeuralError::Format("tensor name is not UTF-8".into()))?;
            let [ndim] = read_exact::<1>(r)?;
            let dims = (0..ndim)
                .map(|_| read_exact::<4>(r).map(u32::from_le_bytes))
                .collect::<Result<Vec<_>, _>>()?;
            let n: usize = dims.iter().map(|&d| d as usize).product();
            let mut payload = vec![0u8; n * 4];
            r.read_exact(&mut payload)
                .map_err(|e| NeuralError::Format(format!("truncated payload of `{name}`: {e}")))?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(NamedTensor { name, dims, data });
        }
        Ok(WeightFile { tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let bytes = fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn header_layout() {
        let mut wf = WeightFile::new();
        wf.push(NamedTensor::from_slice("a", &[2], &[1.0, -0.5]));
        let bytes = wf.to_bytes();
        assert_eq!(&bytes[..4], b"SBW1");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(bytes[16], b'a');
        assert_eq!(bytes[17], 1);
        assert_eq!(&bytes[18..22], &2u32.to_le_bytes());
        assert_eq!(&bytes[22..26], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 30);
    }

    #[test]
    fn mlp_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[5, 4, 2], Activation::Relu, Activation::Tanh, &mut rng);
        let mut wf = WeightFile::new();
        wf.push_mlp("enc", &net);
        let back = WeightFile::read_from(&mut wf.to_bytes().as_slice()).unwrap();
        let net2 = back
            .read_mlp("enc", &[Activation::Relu, Activation::Tanh])
            .unwrap();
        for (a, b) in net.flat_params().iter().zip(net2.flat_params()) {
            assert_eq!(*a as f32, b as f32);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(WeightFile::read_from(&mut &b"SBW2\x01\0\0\0"[..]).is_err());
        let mut bytes = WeightFile {
            tensors: vec![NamedTensor::from_slice("x", &[3], &[1.0, 2.0, 3.0])],
        }
        .to_bytes();
        bytes.truncate(bytes.len() - 2);
        assert!(WeightFile::read_from(&mut bytes.as_slice()).is_err());
    }
}
