use super::{RtmConfig, RtmError, ShotDescriptor};
use crate::wave::{
    imaging_accumulate, ricker, Image, Propagator, PropagatorConfig, Seismogram, SnapshotStore,
    SourceWavelet, VelocityModel,
};

/// Everything shared by the shots of one migration: models, propagators
/// and the source wavelet.
#[derive(Debug)]
pub struct RtmContext {
    config: RtmConfig,
    model: VelocityModel,
    background: VelocityModel,
    wavelet: SourceWavelet,
    true_prop: Propagator<f32>,
    background_prop: Propagator<f32>,
}

impl RtmContext {
    pub fn new(config: RtmConfig) -> Result<Self, RtmError> {
        config.validate()?;
        let model = config.model.build()?;
        let background = model.smoothed(config.smoothing_radius);
        let pcfg = PropagatorConfig {
            dt: config.dt,
            order: config.order,
            nb: config.nb,
            attenuation: config.attenuation,
            check_cfl: true,
        };
        let true_prop = Propagator::new(&model, pcfg.clone())?;
        let background_prop = Propagator::new(&background, pcfg)?;
        let wavelet = ricker(config.f_peak, config.dt, config.nt)?;
        Ok(RtmContext {
            config,
            model,
            background,
            wavelet,
            true_prop,
            background_prop,
        })
    }

    pub fn config(&self) -> &RtmConfig {
        &self.config
    }

    pub fn model(&self) -> &VelocityModel {
        &self.model
    }

    pub fn background(&self) -> &VelocityModel {
        &self.background
    }

    pub fn shots(&self) -> Result<Vec<ShotDescriptor>, RtmError> {
        self.config.shot_descriptors(self.model.dims())
    }

    fn frames(&self) -> usize {
        self.config.nt.div_ceil(self.config.snapshot_every)
    }

    /// Migrates one shot. `hook` runs once per time step of both loops.
    ///
    /// The forward loop steps the true-model and background wavefields
    /// together: the first produces the recording (unless the shot brings
    /// its own), the second the direct arrival to remove and the source
    /// snapshots for imaging. The backward loop sends the residual data back
    /// through the background and correlates with the stored snapshots.
    pub fn run_shot(
        &self,
        shot: &ShotDescriptor,
        hook: &mut dyn FnMut(),
    ) -> Result<Image, RtmError> {
        let wrap = |source| RtmError::Shot {
            shot: shot.id,
            source,
        };
        let cfg = &self.config;
        let (nt, dt) = (cfg.nt, cfg.dt);
        let dims = self.model.dims();
        for p in std::iter::once(&shot.source).chain(&shot.receivers) {
            if (0..3).any(|a| p[a] >= dims[a]) {
                return Err(RtmError::Config(format!(
                    "shot {} point {p:?} outside the {dims:?} grid",
                    shot.id
                )));
            }
        }

        let recorded = match &shot.seismogram {
            Some(path) => Some(
                Seismogram::read_raw(path, shot.receivers.clone(), nt, dt).map_err(wrap)?,
            ),
            None => None,
        };
        let mut observed = Seismogram::new(shot.receivers.clone(), nt, dt).map_err(wrap)?;
        let mut direct = observed.clone();
        let mut store = SnapshotStore::open(
            &cfg.snapshots,
            &format!("shot-{}.snap", shot.id),
            dims,
            self.frames(),
        )
        .map_err(wrap)?;
        let result = self.propagate(shot, hook, recorded, &mut observed, &mut direct, &mut store);
        let cleanup = store.remove().map_err(wrap);
        let image = result.map_err(wrap)?;
        cleanup?;
        Ok(image)
    }

    fn propagate(
        &self,
        shot: &ShotDescriptor,
        hook: &mut dyn FnMut(),
        recorded: Option<Seismogram>,
        observed: &mut Seismogram,
        direct: &mut Seismogram,
        store: &mut SnapshotStore,
    ) -> Result<Image, crate::wave::WaveError> {
        let (nt, every) = (self.config.nt, self.config.snapshot_every);
        let model_true = recorded.is_none();
        let mut fwd_true = self.true_prop.state();
        let mut fwd_bg = self.background_prop.state();
        let mut frame = Vec::new();
        for k in 0..nt {
            hook();
            self.background_prop.advance(&mut fwd_bg)?;
            self.background_prop
                .inject_source(&mut fwd_bg, &self.wavelet, k, shot.source);
            direct.record_row(k, &self.background_prop.record(&fwd_bg, &shot.receivers));
            if model_true {
                self.true_prop.advance(&mut fwd_true)?;
                self.true_prop
                    .inject_source(&mut fwd_true, &self.wavelet, k, shot.source);
                observed.record_row(k, &self.true_prop.record(&fwd_true, &shot.receivers));
            }
            if k % every == 0 {
                store.write_field(k / every, &fwd_bg.curr, &mut frame)?;
            }
        }
        drop(fwd_true);
        let residual = recorded.as_ref().unwrap_or(observed).subtract(direct)?;

        let mut image = Image::zeros(self.model.dims());
        let mut back = self.background_prop.state();
        for k in (0..nt).rev() {
            hook();
            self.background_prop.advance(&mut back)?;
            self.background_prop.inject_receivers(&mut back, &residual, k);
            if k % every == 0 {
                store.read(k / every, &mut frame)?;
                imaging_accumulate(&mut image, &frame, &back.curr)?;
            }
        }
        mute_top(&mut image, self.config.top_mute);
        Ok(image)
    }
}

fn mute_top(image: &mut Image, rows: usize) {
    if rows == 0 {
        return;
    }
    let n = image.dims();
    let mut values = image.values().to_vec();
    for col in values.chunks_mut(n[0]) {
        col[..rows.min(n[0])].fill(0.0);
    }
    *image = Image::from_values(n, values).expect("same shape");
}
