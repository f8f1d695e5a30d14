//! Lossy links between server and clients.
//!
//! A channel corrupts centroid values only; cluster ids and sizes always
//! arrive intact. Corruption is keyed by `(seed, round, direction, client)`,
//! so the same transmission is reproduced exactly regardless of the order in
//! which clients are processed.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Server to client.
    Downlink,
    /// Client to server.
    Uplink,
}

/// Which link directions a channel corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Links {
    #[default]
    Both,
    UplinkOnly,
    DownlinkOnly,
}

impl Links {
    pub fn covers(self, direction: Direction) -> bool {
        matches!(
            (self, direction),
            (Links::Both, _) | (Links::UplinkOnly, Direction::Uplink) | (Links::DownlinkOnly, Direction::Downlink)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Noiseless,
    /// Each transmitted value is independently zeroed with probability `loss_rate`.
    PacketLoss { loss_rate: f64 },
    /// Each transmitted value gains `N(0, (sigma · s)²)` noise, where `s` is the
    /// standard deviation of all values in that transmission.
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    kind: ChannelKind,
    seed: u64,
    links: Links,
}

impl ChannelModel {
    pub fn noiseless() -> Self {
        ChannelModel { kind: ChannelKind::Noiseless, seed: 0, links: Links::Both }
    }

    pub fn packet_loss(loss_rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&loss_rate) {
            return Err(Error::invalid("loss_rate", "must lie in [0, 1]"));
        }
        Ok(ChannelModel { kind: ChannelKind::PacketLoss { loss_rate }, seed, links: Links::Both })
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", "must be a non-negative finite number"));
        }
        Ok(ChannelModel { kind: ChannelKind::Gaussian { sigma }, seed, links: Links::Both })
    }

    pub fn with_links(mut self, links: Links) -> Self {
        self.links = links;
        self
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn links(&self) -> Links {
        self.links
    }

    /// Passes `model` through the channel as transmission `(round, direction,
    /// client)`.
    pub fn transmit(&self, model: &ClusterModel, direction: Direction, round: usize, client: u32) -> ClusterModel {
        let mut out = model.clone();
        if !self.links.covers(direction) {
            return out;
        }
        match self.kind {
            ChannelKind::Noiseless => {}
            ChannelKind::PacketLoss { loss_rate } => {
                if loss_rate == 0.0 {
                    return out;
                }
                let drop = Bernoulli::new(loss_rate).expect("validated rate");
                let mut rng = self.rng(direction, round, client);
                for (_, cluster) in out.iter_mut() {
                    for v in cluster.centroid.as_mut_slice() {
                        if drop.sample(&mut rng) {
                            *v = 0.0;
                        }
                    }
                }
            }
            ChannelKind::Gaussian { sigma } => {
                if sigma == 0.0 {
                    return out;
                }
                let scale = sigma * transmitted_std(model);
                let mut rng = self.rng(direction, round, client);
                for (_, cluster) in out.iter_mut() {
                    for v in cluster.centroid.as_mut_slice() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v += scale * z;
                    }
                }
            }
        }
        out
    }

    fn rng(&self, direction: Direction, round: usize, client: u32) -> ChaCha8Rng {
        let dir = match direction {
            Direction::Downlink => 0,
            Direction::Uplink => 1,
        };
        seed::rng(self.seed, ((round as u64) << 32) | ((client as u64) << 1) | dir)
    }
}

// Population standard deviation of every centroid value in the model.
fn transmitted_std(model: &ClusterModel) -> f64 {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (_, c) in model.iter() {
        for &v in c.centroid.as_slice() {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
    }
    if n == 0 { 0.0 } else { libm::sqrt(m2 / n as f64) }
}

/// Relative accuracy loss in percent: `(base − perturbed) / base × 100`.
pub fn degradation(base_acc: f64, perturbed_acc: f64) -> Result<f64> {
    if base_acc.is_nan() || base_acc <= 0.0 {
        return Err(Error::invalid("base_acc", "must be positive"));
    }
    Ok((base_acc - perturbed_acc) / base_acc * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterId;
    use crate::hdc::Hypervector;
    use alloc::vec::Vec;

    fn model(clusters: usize, dim: usize) -> ClusterModel {
        ClusterModel::from_entries(
            dim,
            (0..clusters).map(|c| {
                let v: Vec<f64> = (0..dim).map(|d| 1.0 + (c * dim + d) as f64 * 0.001).collect();
                (ClusterId(c as u32 + 1), Hypervector::new(v).unwrap(), c + 3)
            }),
        )
        .unwrap()
    }

    fn sizes(m: &ClusterModel) -> Vec<(ClusterId, usize)> {
        m.iter().map(|(id, c)| (id, c.size)).collect()
    }

    #[test]
    fn noiseless_is_identity() {
        let m = model(3, 8);
        assert_eq!(ChannelModel::noiseless().transmit(&m, Direction::Uplink, 4, 2), m);
    }

    #[test]
    fn zero_loss_is_identity_and_full_loss_zeroes() {
        let m = model(3, 8);
        assert_eq!(ChannelModel::packet_loss(0.0, 1).unwrap().transmit(&m, Direction::Uplink, 0, 0), m);
        let lost = ChannelModel::packet_loss(1.0, 1).unwrap().transmit(&m, Direction::Downlink, 0, 0);
        assert!(lost.iter().all(|(_, c)| c.centroid.as_slice().iter().all(|&v| v == 0.0)));
        assert_eq!(sizes(&lost), sizes(&m));
    }

    #[test]
    fn loss_rate_concentrates() {
        let m = model(10, 10_000);
        let out = ChannelModel::packet_loss(0.3, 17).unwrap().transmit(&m, Direction::Uplink, 2, 5);
        let total = 10.0 * 10_000.0;
        let mut zeroed = 0usize;
        for ((_, a), (_, b)) in m.iter().zip(out.iter()) {
            for (x, y) in a.centroid.as_slice().iter().zip(b.centroid.as_slice()) {
                if *y == 0.0 {
                    zeroed += 1;
                } else {
                    assert_eq!(x, y);
                }
            }
        }
        let frac = zeroed as f64 / total;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
        assert_eq!(sizes(&out), sizes(&m));
    }

    #[test]
    fn transmissions_are_keyed() {
        let m = model(2, 64);
        let ch = ChannelModel::packet_loss(0.5, 3).unwrap();
        let a = ch.transmit(&m, Direction::Uplink, 1, 1);
        assert_eq!(a, ch.transmit(&m, Direction::Uplink, 1, 1));
        assert_ne!(a, ch.transmit(&m, Direction::Downlink, 1, 1));
        assert_ne!(a, ch.transmit(&m, Direction::Uplink, 2, 1));
        assert_ne!(a, ch.transmit(&m, Direction::Uplink, 1, 2));
    }

    #[test]
    fn links_restrict_direction() {
        let m = model(2, 16);
        let ch = ChannelModel::packet_loss(1.0, 3).unwrap().with_links(Links::UplinkOnly);
        assert_eq!(ch.transmit(&m, Direction::Downlink, 0, 0), m);
        assert_ne!(ch.transmit(&m, Direction::Uplink, 0, 0), m);
    }

    #[test]
    fn gaussian_zero_sigma_is_identity() {
        let m = model(2, 16);
        assert_eq!(ChannelModel::gaussian(0.0, 9).unwrap().transmit(&m, Direction::Uplink, 0, 0), m);
    }

    #[test]
    fn gaussian_noise_is_unbiased() {
        let m = model(1, 4);
        let ch = ChannelModel::gaussian(0.8, 11).unwrap();
        let s = 0.8 * transmitted_std(&m);
        let trials = 1000;
        let mut sums = [0.0; 4];
        for round in 0..trials {
            let out = ch.transmit(&m, Direction::Downlink, round, 0);
            for (acc, v) in sums.iter_mut().zip(out.get(ClusterId(1)).unwrap().centroid.as_slice()) {
                *acc += v;
            }
        }
        let stderr = s / libm::sqrt(trials as f64);
        for (sum, orig) in sums.iter().zip(m.get(ClusterId(1)).unwrap().centroid.as_slice()) {
            assert!((sum / trials as f64 - orig).abs() < 3.0 * stderr);
        }
    }

    #[test]
    fn invalid_channels() {
        assert!(ChannelModel::packet_loss(1.5, 0).is_err());
        assert!(ChannelModel::packet_loss(-0.1, 0).is_err());
        assert!(ChannelModel::gaussian(-1.0, 0).is_err());
        assert!(ChannelModel::gaussian(f64::NAN, 0).is_err());
    }

    #[test]
    fn degradation_examples() {
        assert_eq!(degradation(0.6754, 0.6754).unwrap(), 0.0);
        assert!((degradation(0.8, 0.6).unwrap() - 25.0).abs() < 1e-12);
        assert!(degradation(0.0, 0.5).is_err());
        assert!(degradation(-0.1, 0.5).is_err());
    }
}
