//! Flat parameter storage with named tensor views, seeded initialization and
//! the on-disk container.
//!
//! All trainable values live in one `Vec<f64>`; a [`Layout`] maps each named
//! tensor to a range of it. Gradients use the same layout, which keeps
//! clipping, updates and finite-difference checks trivial.

use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AlignWeighting;
use crate::error::{Error, Result};
use crate::lexer::Vocabulary;

pub const FORMAT_TAG: &str = "logicloc-params";
pub const FORMAT_VERSION: u32 = 1;

/// Layer sizes. `d_h` is the hidden size of each LSTM direction, so token
/// states are `2 * d_h` wide and line embeddings `4 * d_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub d_emb: usize,
    pub d_h: usize,
    pub d_gat: usize,
    pub d_mlp: usize,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
}

fn default_slope() -> f64 {
    0.2
}

impl Dims {
    pub fn new(d_emb: usize, d_h: usize, d_gat: usize, d_mlp: usize) -> Self {
        Dims {
            d_emb,
            d_h,
            d_gat,
            d_mlp,
            leaky_slope: default_slope(),
        }
    }

    pub fn uniform(d: usize) -> Self {
        Self::new(d, d, d, d)
    }

    pub fn d_token(&self) -> usize {
        2 * self.d_h
    }

    pub fn d_line(&self) -> usize {
        4 * self.d_h
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_emb == 0 || self.d_h == 0 || self.d_gat == 0 || self.d_mlp == 0 {
            return Err(Error::InvalidArgument(format!("all dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "(d_emb {}, d_h {}, d_gat {}, d_mlp {})",
            self.d_emb, self.d_h, self.d_gat, self.d_mlp
        )
    }
}

impl Default for Dims {
    fn default() -> Self {
        Dims::uniform(32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LstmSlots {
    pub w: Range<usize>,
    pub b: Range<usize>,
    pub input: usize,
    pub hidden: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub embedding: Range<usize>,
    /// Indexed `[stage][stream][direction]`: stage 0 precedes the graph layer,
    /// stage 1 follows it; stream 0 is code, 1 pseudocode; direction 0 is
    /// forward, 1 backward.
    pub lstm: [[[LstmSlots; 2]; 2]; 2],
    pub gat_w: Range<usize>,
    pub gat_a: Range<usize>,
    pub mlp_w1: Range<usize>,
    pub mlp_b1: Range<usize>,
    pub mlp_w2: Range<usize>,
    pub mlp_b2: Range<usize>,
    /// (name, shape, range, fan_in) in storage order.
    pub tensors: Vec<(String, Vec<usize>, Range<usize>, usize)>,
    pub total: usize,
}

impl Layout {
    pub fn new(dims: &Dims, vocab_size: usize) -> Self {
        let mut tensors = Vec::new();
        let mut cursor = 0;
        let mut push = |name: String, shape: Vec<usize>, fan_in: usize| {
            let size: usize = shape.iter().product();
            let range = cursor..cursor + size;
            cursor += size;
            tensors.push((name, shape, range.clone(), fan_in));
            range
        };
        let embedding = push("embedding".into(), vec![vocab_size, dims.d_emb], dims.d_emb);
        let h = dims.d_h;
        let mut lstm_slot = |stage: usize, stream: usize, dir: usize, input: usize| {
            let prefix = format!(
                "lstm{}.{}.{}",
                stage + 1,
                ["code", "pseudo"][stream],
                ["fwd", "bwd"][dir]
            );
            let w = push(format!("{prefix}.w"), vec![4 * h, input + h], input + h);
            let b = push(format!("{prefix}.b"), vec![4 * h], input + h);
            LstmSlots {
                w,
                b,
                input,
                hidden: h,
            }
        };
        let mut make_stage = |stage: usize, input: usize| {
            [0, 1].map(|stream| [0, 1].map(|dir| lstm_slot(stage, stream, dir, input)))
        };
        let stage1 = make_stage(0, dims.d_emb);
        let stage2 = make_stage(1, dims.d_gat);
        let gat_w = push("gat.w".into(), vec![dims.d_gat, dims.d_token()], dims.d_token());
        let gat_a = push("gat.a".into(), vec![2 * dims.d_gat], 2 * dims.d_gat);
        let mlp_w1 = push("mlp.w1".into(), vec![dims.d_mlp, dims.d_line()], dims.d_line());
        let mlp_b1 = push("mlp.b1".into(), vec![dims.d_mlp], dims.d_line());
        let mlp_w2 = push("mlp.w2".into(), vec![dims.d_mlp], dims.d_mlp);
        let mlp_b2 = push("mlp.b2".into(), vec![1], dims.d_mlp);
        Layout {
            embedding,
            lstm: [stage1, stage2],
            gat_w,
            gat_a,
            mlp_w1,
            mlp_b1,
            mlp_w2,
            mlp_b2,
            tensors,
            total: cursor,
        }
    }
}

/// All trainable tensors plus the vocabulary and configuration needed to
/// run the model on new programs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    pub vocab: Vocabulary,
    pub align: AlignWeighting,
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: Dims, vocab: Vocabulary, align: AlignWeighting) -> Self {
        let layout = Layout::new(&dims, vocab.len());
        let data = vec![0.0; layout.total];
        ModelParams {
            dims,
            vocab,
            align,
            layout,
            data,
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per tensor, seeded.
    pub fn init(dims: Dims, vocab: Vocabulary, align: AlignWeighting, seed: u64) -> Self {
        let mut params = Self::zeros(dims, vocab, align);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (_, _, range, fan_in) in &params.layout.tensors {
            let bound = 1.0 / (*fan_in as f64).sqrt();
            for v in &mut params.data[range.clone()] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        params
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .tensors
            .iter()
            .find(|t| t.0 == name)
            .map(|t| &self.data[t.2.clone()])
    }

    pub fn embedding_row(&self, id: usize) -> &[f64] {
        let d = self.dims.d_emb;
        let start = self.layout.embedding.start + id * d;
        &self.data[start..start + d]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> String {
        let file = ParamFile {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            dims: self.dims,
            align: self.align,
            vocab: self.vocab.tokens().to_vec(),
            tensors: self
                .layout
                .tensors
                .iter()
                .map(|(name, shape, range, _)| TensorRecord {
                    name: name.clone(),
                    shape: shape.clone(),
                    data: self.data[range.clone()].to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("parameters serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamFile =
            serde_json::from_str(text).map_err(|e| Error::Params(format!("unreadable: {e}")))?;
        if file.format != FORMAT_TAG {
            return Err(Error::Params(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::Params(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        file.dims.validate()?;
        let vocab = Vocabulary::from(file.vocab);
        let mut params = ModelParams::zeros(file.dims, vocab, file.align);
        if file.tensors.len() != params.layout.tensors.len() {
            return Err(Error::Params(format!(
                "expected {} tensors, found {}",
                params.layout.tensors.len(),
                file.tensors.len()
            )));
        }
        for (record, (name, shape, range, _)) in file.tensors.iter().zip(&params.layout.tensors) {
            if &record.name != name || &record.shape != shape || record.data.len() != range.len() {
                return Err(Error::Params(format!(
                    "tensor {} {:?} ({} values) does not match expected {name} {shape:?}",
                    record.name,
                    record.shape,
                    record.data.len()
                )));
            }
        }
        for (record, (_, _, range, _)) in file.tensors.into_iter().zip(params.layout.tensors.clone()) {
            params.data[range].copy_from_slice(&record.data);
        }
        if !params.is_finite() {
            return Err(Error::Params("non-finite parameter values".into()));
        }
        Ok(params)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    format: String,
    version: u32,
    dims: Dims,
    align: AlignWeighting,
    vocab: Vec<String>,
    tensors: Vec<TensorRecord>,
}

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, params.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelParams::from_json(&text)
}

/// Loads parameters and checks them against the expected layer sizes.
pub fn load_params_expecting(path: impl AsRef<Path>, expected: &Dims) -> Result<ModelParams> {
    let params = load_params(path)?;
    let found = params.dims;
    if (found.d_emb, found.d_h, found.d_gat, found.d_mlp)
        != (expected.d_emb, expected.d_h, expected.d_gat, expected.d_mlp)
    {
        return Err(Error::DimensionMismatch {
            found: found.describe(),
            expected: expected.describe(),
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["a", "b", "c"].map(String::from))
    }

    #[test]
    fn layout_is_contiguous_and_named_uniquely() {
        let layout = Layout::new(&Dims::new(3, 4, 5, 6), 7);
        let mut cursor = 0;
        for (_, shape, range, _) in &layout.tensors {
            assert_eq!(range.start, cursor);
            assert_eq!(range.len(), shape.iter().product::<usize>());
            cursor = range.end;
        }
        assert_eq!(cursor, layout.total);
        let mut names: Vec<_> = layout.tensors.iter().map(|t| t.0.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), layout.tensors.len());
        assert_eq!(layout.lstm[1][0][1].input, 5);
        assert_eq!(layout.lstm[0][1][0].w.len(), 16 * 7);
    }

    #[test]
    fn init_respects_fan_in_bounds_and_seed() {
        let p = ModelParams::init(Dims::uniform(4), vocab(), AlignWeighting::default(), 5);
        for (_, _, range, fan_in) in &p.layout.tensors {
            let bound = 1.0 / (*fan_in as f64).sqrt();
            assert!(p.data[range.clone()].iter().all(|v| v.abs() <= bound));
        }
        assert_eq!(p, ModelParams::init(Dims::uniform(4), vocab(), AlignWeighting::default(), 5));
        assert_ne!(p.data, ModelParams::init(Dims::uniform(4), vocab(), AlignWeighting::default(), 6).data);
    }

    #[test]
    fn save_load_bitwise() {
        let p = ModelParams::init(Dims::new(3, 2, 4, 5), vocab(), AlignWeighting::default(), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_params(&p, &path).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(p.dims, q.dims);
        assert_eq!(p.vocab, q.vocab);
        assert!(p.data.iter().zip(&q.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_file_rejected() {
        let p = ModelParams::init(Dims::uniform(2), vocab(), AlignWeighting::default(), 1);
        let json = p.to_json();
        let cut = &json[..json.len() / 2];
        assert!(matches!(ModelParams::from_json(cut), Err(Error::Params(_))));
    }

    #[test]
    fn version_checked() {
        let p = ModelParams::init(Dims::uniform(2), vocab(), AlignWeighting::default(), 1);
        let json = p.to_json().replace("\"version\":1", "\"version\":9");
        assert!(matches!(ModelParams::from_json(&json), Err(Error::Params(m)) if m.contains("version")));
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let p = ModelParams::init(Dims::uniform(32), vocab(), AlignWeighting::default(), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_params(&p, &path).unwrap();
        let err = load_params_expecting(&path, &Dims::uniform(64)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("32") && msg.contains("64"), "{msg}");
        assert!(load_params_expecting(&path, &Dims::uniform(32)).is_ok());
    }

    #[test]
    fn tampered_shape_rejected() {
        let p = ModelParams::init(Dims::uniform(2), vocab(), AlignWeighting::default(), 1);
        let json = p.to_json().replace("\"shape\":[5,2]", "\"shape\":[2,5]");
        assert!(ModelParams::from_json(&json).is_err());
    }
}
