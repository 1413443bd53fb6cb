use crate::model::{JumpEvent, RatchetParams, RatchetState, Touch, Trajectory};
use crate::Real;

/// Point `S_n` of the graphical construction that became the reflection
/// point at time `tau_tilde`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphicalEvent<T> {
    pub tau_tilde: T,
    pub s: T,
}

/// Callbacks fired by the engines while a path is generated.
///
/// Within one step the order is: `touch`, then any `jump`s, then the grid
/// `sample`. A touch is stamped with the time at which its step started.
pub trait PathObserver<T> {
    /// A state; `on_grid` is false for the extra samples the graphical
    /// engine emits at jump times.
    fn sample(&mut self, _state: &RatchetState<T>, _on_grid: bool) {}
    fn touch(&mut self, _touch: &Touch<T>) {}
    fn jump(&mut self, _jump: &JumpEvent<T>) {}
    /// Driving Brownian value and current `S_n` at each grid time
    /// (graphical engine only).
    fn driving(&mut self, _t: T, _b: T, _s: T) {}
    fn graphical_event(&mut self, _event: &GraphicalEvent<T>) {}
    /// Size of the bound set after it changed (dissociation variant only).
    fn bound_count(&mut self, _t: T, _n: usize) {}
}

impl<T, O: PathObserver<T> + ?Sized> PathObserver<T> for &mut O {
    fn sample(&mut self, s: &RatchetState<T>, g: bool) {
        (**self).sample(s, g)
    }
    fn touch(&mut self, c: &Touch<T>) {
        (**self).touch(c)
    }
    fn jump(&mut self, j: &JumpEvent<T>) {
        (**self).jump(j)
    }
    fn driving(&mut self, t: T, b: T, s: T) {
        (**self).driving(t, b, s)
    }
    fn graphical_event(&mut self, e: &GraphicalEvent<T>) {
        (**self).graphical_event(e)
    }
    fn bound_count(&mut self, t: T, n: usize) {
        (**self).bound_count(t, n)
    }
}

impl<T: Copy, A: PathObserver<T>, B: PathObserver<T>> PathObserver<T> for (A, B) {
    fn sample(&mut self, s: &RatchetState<T>, g: bool) {
        self.0.sample(s, g);
        self.1.sample(s, g);
    }
    fn touch(&mut self, c: &Touch<T>) {
        self.0.touch(c);
        self.1.touch(c);
    }
    fn jump(&mut self, j: &JumpEvent<T>) {
        self.0.jump(j);
        self.1.jump(j);
    }
    fn driving(&mut self, t: T, b: T, s: T) {
        self.0.driving(t, b, s);
        self.1.driving(t, b, s);
    }
    fn graphical_event(&mut self, e: &GraphicalEvent<T>) {
        self.0.graphical_event(e);
        self.1.graphical_event(e);
    }
    fn bound_count(&mut self, t: T, n: usize) {
        self.0.bound_count(t, n);
        self.1.bound_count(t, n);
    }
}

/// Observer that ignores everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoObserver;

impl<T> PathObserver<T> for NoObserver {}

/// Keeps only the last state.
#[derive(Clone, Copy, Debug, Default)]
pub struct FinalState<T> {
    pub state: RatchetState<T>,
}

impl<T: Copy> PathObserver<T> for FinalState<T> {
    fn sample(&mut self, s: &RatchetState<T>, _: bool) {
        self.state = *s;
    }
}

/// Builds a [`Trajectory`]: every `stride`-th grid state, every state at a
/// jump time, and the final state.
#[derive(Clone, Debug)]
pub struct Recorder<T> {
    traj: Trajectory<T>,
    stride: usize,
    grid_index: usize,
    jumped: bool,
    last: Option<RatchetState<T>>,
}

impl<T: Real> Recorder<T> {
    pub fn new(params: &RatchetParams<T>) -> Self {
        let steps = params.steps() / params.stride.max(1);
        Self {
            traj: Trajectory {
                params: params.clone(),
                samples: Vec::with_capacity(steps + 2),
                jumps: Vec::new(),
                touches: Vec::new(),
            },
            stride: params.stride.max(1),
            grid_index: 0,
            jumped: false,
            last: None,
        }
    }

    pub fn finish(mut self) -> Trajectory<T> {
        if let Some(last) = self.last {
            if self.traj.samples.last().map(|s| s.t) != Some(last.t) {
                self.traj.samples.push(last);
            }
        }
        self.traj
    }
}

impl<T: Real> PathObserver<T> for Recorder<T> {
    fn sample(&mut self, s: &RatchetState<T>, on_grid: bool) {
        let keep = if on_grid {
            let k = self.grid_index % self.stride == 0;
            self.grid_index += 1;
            k || self.jumped
        } else {
            true
        };
        self.jumped = false;
        if keep {
            self.traj.samples.push(*s);
        }
        self.last = Some(*s);
    }

    fn touch(&mut self, c: &Touch<T>) {
        self.traj.touches.push(*c);
    }

    fn jump(&mut self, j: &JumpEvent<T>) {
        self.traj.jumps.push(*j);
        self.jumped = true;
    }
}
