use rand::RngCore;

use crate::error::{LabError, Result};
use crate::inducing::classify::{Color, Scheme};
use crate::inducing::hat::red_affine;
use crate::rng::SampleRng;
use crate::tower::spec::{BaseStepper, InducedMapSpec, Realization};

/// One step of an induced orbit: the current point and its inducing time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InducedStep {
    pub y: f64,
    pub tau: u64,
}

/// A running orbit of `F` drawn from normalised Lebesgue measure on `Y`.
/// When the floating-point orbit leaves the cells it restarts from a fresh
/// uniform point and counts the restart.
pub struct InducedOrbit<'a> {
    spec: &'a InducedMapSpec,
    rng: SampleRng,
    state: State<'a>,
    pub restarts: u64,
}

enum State<'a> {
    Float(f64),
    Bits { window: u64, pool: u64, left: u32 },
    Scheme { scheme: Box<Scheme<'a>>, st: BaseStepper, y: f64 },
}

impl<'a> InducedOrbit<'a> {
    pub fn new(spec: &'a InducedMapSpec, mut rng: SampleRng) -> Result<InducedOrbit<'a>> {
        let state = match &spec.realization {
            Realization::Cells => State::Float(spec.uniform_point(&mut rng)),
            Realization::DoublingBits => State::Bits {
                window: rng.next_u64() >> 1,
                pool: 0,
                left: 0,
            },
            Realization::Scheme { pair, v, caps } => {
                let Some(crate::tower::spec::BaseMap::Family { family, t }) = &spec.base else {
                    return Err(LabError::Unsupported("scheme orbits need a family base map".into()));
                };
                State::Scheme {
                    scheme: Box::new(Scheme::new(family, *t, pair, *v, caps.clone())?),
                    st: spec.base.as_ref().map(|b| b.stepper()).expect("checked above"),
                    y: spec.uniform_point(&mut rng),
                }
            }
        };
        Ok(InducedOrbit {
            spec,
            rng,
            state,
            restarts: 0,
        })
    }

    /// The current point and its inducing time; advances the orbit by `F`.
    pub fn advance(&mut self) -> Result<InducedStep> {
        const MAX_RESTARTS: u32 = 1000;
        for _ in 0..MAX_RESTARTS {
            match self.try_advance()? {
                Some(s) => return Ok(s),
                None => {
                    self.restarts += 1;
                    let fresh = self.spec.uniform_point(&mut self.rng);
                    match &mut self.state {
                        State::Float(y) => *y = fresh,
                        State::Scheme { y, .. } => *y = fresh,
                        State::Bits { .. } => unreachable!("bit orbits never restart"),
                    }
                }
            }
        }
        Err(LabError::NoConvergence(format!(
            "induced orbit restarted {MAX_RESTARTS} times in a row"
        )))
    }

    fn try_advance(&mut self) -> Result<Option<InducedStep>> {
        let spec = self.spec;
        match &mut self.state {
            State::Float(y) => {
                let Some(i) = spec.cell_of(*y) else { return Ok(None) };
                let step = InducedStep {
                    y: *y,
                    tau: spec.cells[i].tau,
                };
                *y = spec.apply(i, *y)?;
                Ok(Some(step))
            }
            State::Bits { window, pool, left } => {
                // leading bit of the window is 0 on Y; tau is one plus the
                // run of ones that follows
                let y = *window as f64 * 2f64.powi(-64);
                let mut tau = 0;
                loop {
                    if *left == 0 {
                        *pool = self.rng.next_u64();
                        *left = 64;
                    }
                    *window = (*window << 1) | (*pool & 1);
                    *pool >>= 1;
                    *left -= 1;
                    tau += 1;
                    if *window >> 63 == 0 {
                        break;
                    }
                }
                Ok(Some(InducedStep { y, tau }))
            }
            State::Scheme { scheme, st, y } => {
                let Ok(c) = scheme.classify(*y) else { return Ok(None) };
                let (image, tau) = match c.color {
                    Color::Blue => (st.iterate(*y, c.rho), c.rho),
                    Color::Red => {
                        let v = scheme.v.expect("red cells need a basin");
                        (red_affine(&v, &scheme.pair.u1, st.iterate(*y, c.rho)), c.rho + 1)
                    }
                    Color::Yellow => return Ok(None),
                };
                let step = InducedStep { y: *y, tau };
                if !spec.y.contains(image) {
                    return Ok(None);
                }
                *y = image;
                Ok(Some(step))
            }
        }
    }

    /// Skip `n` steps.
    pub fn burn(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            self.advance()?;
        }
        Ok(())
    }
}
