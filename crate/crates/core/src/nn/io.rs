//! Model and history persistence.
//!
//! Model file: `QNNM` container, f64 little-endian parameter blocks in a
//! fixed order (lstm1 w_x, w_h, b; lstm2 w_x, w_h, b; head_main w1, b1, w2,
//! b2; head_aux w1, b1, w2, b2), row-major. History: CSV with one line per
//! epoch.

use ndarray::{Array1, Array2};

use crate::container::{self, Container, Metadata};
use crate::error::{Error, Result};

use super::train::History;
use super::{Head, LstmLayer, Model, ModelMeta, Scalar};

pub fn save_model<F: Scalar>(model: &Model<F>, digest: u64, path: impl AsRef<std::path::Path>) -> Result<()> {
    model_container(model, digest).save(path)
}

pub fn model_container<F: Scalar>(model: &Model<F>, digest: u64) -> Container {
    let mut meta = Metadata::new();
    meta.push("distance", model.meta.distance);
    meta.push("input_width", model.meta.input_width);
    meta.push("final_width", model.meta.final_width);
    meta.push("n_l", model.meta.n_l);
    meta.push("digest", format!("{digest:016x}"));
    let mut c = Container::new(container::MAGIC_MODEL, meta);
    let push2 = |c: &mut Container, a: &Array2<F>| {
        c.blocks.push(container::f64s_to_bytes(
            &a.iter().map(|&v| v.to_f64()).collect::<Vec<_>>(),
        ));
    };
    let push1 = |c: &mut Container, a: &Array1<F>| {
        c.blocks.push(container::f64s_to_bytes(
            &a.iter().map(|&v| v.to_f64()).collect::<Vec<_>>(),
        ));
    };
    for layer in [&model.lstm1, &model.lstm2] {
        push2(&mut c, &layer.w_x);
        push2(&mut c, &layer.w_h);
        push1(&mut c, &layer.b);
    }
    for head in [&model.head_main, &model.head_aux] {
        push2(&mut c, &head.w1);
        push1(&mut c, &head.b1);
        push1(&mut c, &head.w2);
        c.blocks.push(container::f64s_to_bytes(&[head.b2.to_f64()]));
    }
    c
}

pub fn load_model<F: Scalar>(path: impl AsRef<std::path::Path>) -> Result<(Model<F>, u64)> {
    let c = Container::load(path, container::MAGIC_MODEL)?;
    model_from_container(&c)
}

pub fn model_from_container<F: Scalar>(c: &Container) -> Result<(Model<F>, u64)> {
    let meta = ModelMeta {
        distance: c.meta.parse("distance")?,
        input_width: c.meta.parse("input_width")?,
        final_width: c.meta.parse("final_width")?,
        n_l: c.meta.parse("n_l")?,
    };
    let digest = u64::from_str_radix(c.meta.require("digest")?, 16)
        .map_err(|_| Error::Format("bad digest".into()))?;
    if c.blocks.len() != 14 {
        return Err(Error::Format(format!("expected 14 parameter blocks, found {}", c.blocks.len())));
    }
    fn next2<'a, F: Scalar>(
        blocks: &mut impl Iterator<Item = &'a Vec<u8>>,
        rows: usize,
        cols: usize,
    ) -> Result<Array2<F>> {
        let xs = container::bytes_to_f64s(blocks.next().unwrap())?;
        if xs.len() != rows * cols {
            return Err(Error::Format(format!(
                "block has {} values, expected {rows}x{cols}",
                xs.len()
            )));
        }
        Ok(Array2::from_shape_vec((rows, cols), xs.into_iter().map(F::from_f64).collect()).unwrap())
    }
    fn read_head<'a, F: Scalar>(
        blocks: &mut impl Iterator<Item = &'a Vec<u8>>,
        input: usize,
        n: usize,
    ) -> Result<Head<F>> {
        Ok(Head {
            w1: next2(blocks, input, n)?,
            b1: next2::<F>(blocks, 1, n)?.row(0).to_owned(),
            w2: next2::<F>(blocks, 1, n)?.row(0).to_owned(),
            b2: {
                let xs = container::bytes_to_f64s(blocks.next().unwrap())?;
                F::from_f64(xs[0])
            },
        })
    }
    let mut blocks = c.blocks.iter();
    let n = meta.n_l;
    let lstm1 = LstmLayer {
        w_x: next2(&mut blocks, meta.input_width, 4 * n)?,
        w_h: next2(&mut blocks, n, 4 * n)?,
        b: next2::<F>(&mut blocks, 1, 4 * n)?.row(0).to_owned(),
    };
    let lstm2 = LstmLayer {
        w_x: next2(&mut blocks, n, 4 * n)?,
        w_h: next2(&mut blocks, n, 4 * n)?,
        b: next2::<F>(&mut blocks, 1, 4 * n)?.row(0).to_owned(),
    };
    let head_main = read_head(&mut blocks, n + meta.final_width, n)?;
    let head_aux = read_head(&mut blocks, n, n)?;
    Ok((Model { meta, lstm1, lstm2, head_main, head_aux }, digest))
}

/// CSV: epoch, train_loss, val_loss, lr.
pub fn history_csv(history: &History) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,lr\n");
    for e in &history.epochs {
        s.push_str(&format!(
            "{},{:.9},{:.9},{:.6e}\n",
            e.epoch, e.train_loss, e.val_loss, e.learning_rate
        ));
    }
    s
}
