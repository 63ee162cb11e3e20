//! Binary agent checkpoints.
//!
//! Little-endian layout: the 8-byte magic `TLAAGENT`, a `u32` version, the
//! agent shape and hyperparameters, the period it was trained at, the
//! step/update counters, the six networks (actor, actor target, critics,
//! critic targets) and the three Adam states. Every `f64` is stored by its
//! bit pattern, so a load reproduces the saved values exactly. The replay
//! memory and the random streams are not stored; a loaded agent acts
//! identically but does not resume training bit for bit.

use std::path::Path;

use tla_core::adam::{AdamConfig, AdamState};
use tla_core::nn::{Activation, Linear, Mlp};
use tla_core::td3::{Td3Agent, Td3Config};
use tla_core::tensor::Tensor;

use crate::error::{HarnessError, Result};

const MAGIC: &[u8; 8] = b"TLAAGENT";
const VERSION: u32 = 1;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|&x| self.f64(x));
    }
    fn tags(&mut self, v: &[Activation]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|a| self.u8(a.tag()));
    }
    fn mlp(&mut self, net: &Mlp) {
        self.u8(net.hidden_activation().tag());
        self.tags(net.head());
        self.f64s(net.output_scale());
        self.u64(net.layers().len() as u64);
        for l in net.layers() {
            self.u64(l.out_dim() as u64);
            self.u64(l.in_dim() as u64);
            self.f64s(l.weight.data());
            self.f64s(l.bias.data());
        }
    }
    fn adam(&mut self, a: &AdamState) {
        let c = a.config;
        for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
            self.f64(v);
        }
        self.u64(a.step_count);
        self.u64(a.first_moment.len() as u64);
        for (m, v) in a.first_moment.iter().zip(&a.second_moment) {
            self.f64s(m);
            self.f64s(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

type Decode<T> = std::result::Result<T, String>;

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Decode<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Decode<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Decode<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Decode<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Decode<usize> {
        let n = self.u64()? as usize;
        if n > self.bytes.len() {
            return Err(format!("implausible length {n}"));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Decode<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self) -> Decode<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn activation(&mut self) -> Decode<Activation> {
        let t = self.u8()?;
        Activation::from_tag(t).ok_or_else(|| format!("unknown activation tag {t}"))
    }
    fn tags(&mut self) -> Decode<Vec<Activation>> {
        let n = self.len()?;
        (0..n).map(|_| self.activation()).collect()
    }
    fn mlp(&mut self) -> Decode<Mlp> {
        let hidden = self.activation()?;
        let head = self.tags()?;
        let scale = self.f64s()?;
        let n = self.len()?;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let out = self.len()?;
            let inp = self.len()?;
            let weight = Tensor::new(vec![out, inp], self.f64s()?).map_err(|e| e.to_string())?;
            let bias = Tensor::new(vec![out], self.f64s()?).map_err(|e| e.to_string())?;
            layers.push(Linear { weight, bias });
        }
        Mlp::from_layers(layers, hidden, head, scale).map_err(|e| e.to_string())
    }
    fn adam(&mut self) -> Decode<AdamState> {
        let config = AdamConfig {
            learning_rate: self.f64()?,
            beta1: self.f64()?,
            beta2: self.f64()?,
            epsilon: self.f64()?,
        };
        let step_count = self.u64()?;
        let n = self.len()?;
        let mut first_moment = Vec::with_capacity(n);
        let mut second_moment = Vec::with_capacity(n);
        for _ in 0..n {
            first_moment.push(self.f64s()?);
            second_moment.push(self.f64s()?);
        }
        Ok(AdamState {
            config,
            step_count,
            first_moment,
            second_moment,
        })
    }
}

pub fn encode(agent: &Td3Agent) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&VERSION.to_le_bytes());
    w.u64(agent.state_dim() as u64);
    w.f64s(agent.action_low());
    w.f64s(agent.action_high());
    w.tags(agent.actor.head());
    let c = agent.config();
    w.u64(c.hidden.len() as u64);
    c.hidden.iter().for_each(|&h| w.u64(h as u64));
    for v in [c.gamma, c.tau, c.policy_noise, c.noise_clip, c.exploration_noise] {
        w.f64(v);
    }
    for v in [
        c.policy_delay,
        c.warmup_steps,
        c.batch_size as u64,
        c.buffer_capacity as u64,
    ] {
        w.u64(v);
    }
    match agent.control_period() {
        Some(p) => {
            w.u8(1);
            w.f64(p);
        }
        None => w.u8(0),
    }
    w.u64(agent.env_steps());
    w.u64(agent.critic_updates());
    w.u64(agent.actor_updates());
    for net in [
        &agent.actor,
        &agent.actor_target,
        &agent.critic1,
        &agent.critic2,
        &agent.critic1_target,
        &agent.critic2_target,
    ] {
        w.mlp(net);
    }
    for opt in [&agent.actor_opt, &agent.critic1_opt, &agent.critic2_opt] {
        w.adam(opt);
    }
    w.0
}

fn decode_inner(bytes: &[u8]) -> Decode<Td3Agent> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not an agent checkpoint".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let state_dim = r.len()?;
    let low = r.f64s()?;
    let high = r.f64s()?;
    let head = r.tags()?;
    let n_hidden = r.len()?;
    let hidden = (0..n_hidden).map(|_| r.len()).collect::<Decode<Vec<_>>>()?;
    let mut config = Td3Config {
        hidden,
        gamma: r.f64()?,
        tau: r.f64()?,
        policy_noise: r.f64()?,
        noise_clip: r.f64()?,
        exploration_noise: r.f64()?,
        policy_delay: r.u64()?,
        warmup_steps: r.u64()?,
        batch_size: r.u64()? as usize,
        buffer_capacity: r.u64()? as usize,
        ..Td3Config::default()
    };
    let period = match r.u8()? {
        0 => None,
        1 => Some(r.f64()?),
        t => return Err(format!("bad period flag {t}")),
    };
    let counters = (r.u64()?, r.u64()?, r.u64()?);
    let nets: Vec<Mlp> = (0..6).map(|_| r.mlp()).collect::<Decode<_>>()?;
    let opts: Vec<AdamState> = (0..3).map(|_| r.adam()).collect::<Decode<_>>()?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    config.adam = opts[0].config;
    let mut agent = Td3Agent::with_head(state_dim, &low, &high, head, config, 0)
        .map_err(|e| e.to_string())?;
    let mut nets = nets.into_iter();
    for slot in [
        &mut agent.actor,
        &mut agent.actor_target,
        &mut agent.critic1,
        &mut agent.critic2,
        &mut agent.critic1_target,
        &mut agent.critic2_target,
    ] {
        let net = nets.next().unwrap();
        if !slot.same_architecture(&net) {
            return Err("network shapes disagree with the stored agent shape".into());
        }
        *slot = net;
    }
    let mut opts = opts.into_iter();
    agent.actor_opt = opts.next().unwrap();
    agent.critic1_opt = opts.next().unwrap();
    agent.critic2_opt = opts.next().unwrap();
    agent.set_counters(counters.0, counters.1, counters.2);
    if let Some(p) = period {
        agent.set_control_period(p);
    }
    Ok(agent)
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Td3Agent, String> {
    decode_inner(bytes)
}

pub fn save(agent: &Td3Agent, path: &Path) -> Result<()> {
    std::fs::write(path, encode(agent)).map_err(HarnessError::io(path))
}

pub fn load(path: &Path) -> Result<Td3Agent> {
    let bytes = std::fs::read(path).map_err(HarnessError::io(path))?;
    decode(&bytes).map_err(|message| HarnessError::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
