//! Versioned binary snapshot of an agent and the RNG driving it.
//!
//! Layout (little-endian): magic `TASACCKP`, u32 version, a length-prefixed
//! JSON block with the scalar state, then each network as its layer sizes,
//! parameters, Adam first and second moments, and Adam step count. Networks
//! are stored as actors, critics, target critics.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::bundle::AgentBundle;
use super::hyper::Hyperparameters;
use super::strategy::SelectionStrategy;
use crate::binio::{read_f64s, read_header, read_usizes, write_f64s, write_header, write_usizes};
use crate::error::{Error, Result};
use crate::nn::{AdamMoments, Dense, Mlp, ScalarAdam};
use crate::rng::{Rng, RngState};

const MAGIC: &[u8; 8] = b"TASACCKP";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Scalars {
    obs_dim: usize,
    action_dim: usize,
    n_actors: usize,
    log_alpha: f64,
    alpha_adam: [f64; 2],
    alpha_adam_step: u64,
    strategy: SelectionStrategy,
    hyper: Hyperparameters,
    rng: RngState,
}

fn flat(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|d| d.weight.iter().chain(d.bias.iter()).copied())
        .collect()
}

fn unflat(sizes: &[usize], values: &[f64]) -> Result<Vec<Dense>> {
    let mut net = Mlp::zeros(sizes)?;
    net.set_params_flat(values)?;
    Ok(net.layers().to_vec())
}

fn write_net(w: &mut impl Write, net: &Mlp) -> Result<()> {
    write_usizes(w, &net.sizes())?;
    write_f64s(w, &net.params_flat())?;
    write_f64s(w, &flat(&net.moments().m))?;
    write_f64s(w, &flat(&net.moments().v))?;
    w.write_u64::<LE>(net.moments().step)?;
    Ok(())
}

fn read_net(r: &mut impl Read) -> Result<Mlp> {
    let sizes = read_usizes(r)?;
    let mut net = Mlp::zeros(&sizes)?;
    net.set_params_flat(&read_f64s(r)?)?;
    let m = unflat(&sizes, &read_f64s(r)?)?;
    let v = unflat(&sizes, &read_f64s(r)?)?;
    let step = r.read_u64::<LE>()?;
    net.set_moments(AdamMoments { m, v, step })?;
    Ok(net)
}

pub fn save_checkpoint(path: impl AsRef<Path>, bundle: &AgentBundle, rng: &Rng) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, MAGIC, VERSION)?;
    let scalars = Scalars {
        obs_dim: bundle.obs_dim,
        action_dim: bundle.action_dim,
        n_actors: bundle.actors.len(),
        log_alpha: bundle.log_alpha,
        alpha_adam: [bundle.alpha_optimizer.m, bundle.alpha_optimizer.v],
        alpha_adam_step: bundle.alpha_optimizer.step,
        strategy: bundle.strategy,
        hyper: bundle.hyper.clone(),
        rng: rng.state(),
    };
    let json = serde_json::to_vec(&scalars)?;
    w.write_u64::<LE>(json.len() as u64)?;
    w.write_all(&json)?;
    for net in bundle
        .actors
        .iter()
        .chain(&bundle.critics)
        .chain(&bundle.target_critics)
    {
        write_net(&mut w, net)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(AgentBundle, Rng)> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r, MAGIC, VERSION)?;
    let len = r.read_u64::<LE>()? as usize;
    if len > 1 << 24 {
        return Err(Error::Format(format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let s: Scalars = serde_json::from_slice(&json)?;
    if !(1..=2).contains(&s.n_actors) {
        return Err(Error::Format(format!(
            "{} actors in checkpoint",
            s.n_actors
        )));
    }
    let actors = (0..s.n_actors)
        .map(|_| read_net(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let critics = [read_net(&mut r)?, read_net(&mut r)?];
    let target_critics = [read_net(&mut r)?, read_net(&mut r)?];
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            rest.len()
        )));
    }
    let bundle = AgentBundle {
        actors,
        critics,
        target_critics,
        log_alpha: s.log_alpha,
        alpha_optimizer: ScalarAdam {
            m: s.alpha_adam[0],
            v: s.alpha_adam[1],
            step: s.alpha_adam_step,
        },
        strategy: s.strategy,
        hyper: s.hyper,
        obs_dim: s.obs_dim,
        action_dim: s.action_dim,
    };
    Ok((bundle, Rng::from_state(s.rng)))
}
