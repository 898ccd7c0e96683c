import math

import pytest
from hypothesis import given, strategies as st

from hybridpack.protocols import (
    CCCV,
    Constant,
    FeedbackSample,
    FixedPulse,
    Percussive,
    PercussiveParams,
    ProfileError,
    cccv_level,
    flux_at,
    initial_percussive_state,
    next_percussive_level,
)

PULSE = FixedPulse(5.0, 0.0, 20, 0.5)


def make_params(**kw):
    base = dict(
        base_amplitude=5.0, min_amplitude=1.0, max_amplitude=8.0,
        pulse_duration=10.0, rest_duration=5.0,
        impedance_threshold=0.05, temperature_threshold=320.0,
        amplitude_step=0.8,
    )
    base.update(kw)
    return PercussiveParams(**base)


def drive(params, impedance, temperature, t_end, dt=0.5):
    """Feed constant feedback; returns (times, levels, amplitudes, phases)."""
    state = initial_percussive_state(params)
    times, levels, amps, phases = [], [], [], []
    t = 0.0
    k = 0
    while t < t_end:
        level, state = next_percussive_level(params, state, FeedbackSample(t, impedance, temperature))
        times.append(t)
        levels.append(level)
        amps.append(state.amplitude)
        phases.append(state.phase)
        k += 1
        t = k * dt
    return times, levels, amps, phases


def test_fixed_pulse_examples():
    assert flux_at(PULSE, 3) == 5.0
    assert flux_at(PULSE, 15) == 0.0
    assert flux_at(Constant(2.0), 123.4) == 2.0


# dyadic times keep t + k*period exact
@given(st.integers(0, 10**6).map(lambda i: i / 64), st.integers(1, 50))
def test_fixed_pulse_periodic(t, k):
    p = FixedPulse(5.0, 0.5, 8.0, 0.25)
    assert flux_at(p, t) == flux_at(p, t + k * p.period)


def test_fixed_pulse_time_average():
    p = FixedPulse(5.0, 1.0, 20.0, 0.25)
    n = 4000  # samples over 4 periods
    dt = 4 * p.period / n
    avg = sum(flux_at(p, (i + 0.5) * dt) for i in range(n)) / n
    assert avg == pytest.approx(0.25 * 5.0 + 0.75 * 1.0, rel=1e-12)
    assert p.mean_level == 0.25 * 5.0 + 0.75 * 1.0


@pytest.mark.parametrize("kw", [dict(period=0.0), dict(duty=0.0), dict(duty=1.0)])
def test_fixed_pulse_invariants(kw):
    args = dict(high_level=5.0, rest_level=0.0, period=20.0, duty=0.5)
    args.update(kw)
    with pytest.raises(ProfileError):
        FixedPulse(**args)


def test_flux_at_rejects_feedback_profiles():
    with pytest.raises(ProfileError):
        flux_at(Percussive(make_params()), 1.0)
    with pytest.raises(ProfileError):
        flux_at(CCCV(2.0, 4.2, 0.1), 1.0)


def test_percussive_ramps_to_max_when_clean():
    p = make_params()
    _, _, amps, _ = drive(p, impedance=0.01, temperature=280.0, t_end=15 * 20)
    assert amps[-1] == p.max_amplitude
    first_max = amps.index(p.max_amplitude)
    assert all(a == p.max_amplitude for a in amps[first_max:])


def test_percussive_backs_off_to_min():
    p = make_params()
    times, _, amps, _ = drive(p, impedance=0.1, temperature=300.0, t_end=30 * 15)
    cycles_needed = math.ceil(math.log(p.min_amplitude / p.base_amplitude) / math.log(p.amplitude_step))
    cycle = p.pulse_duration + p.rest_duration
    reached = next(t for t, a in zip(times, amps) if a == p.min_amplitude)
    assert reached == pytest.approx(cycles_needed * cycle)
    assert amps[-1] == p.min_amplitude


def test_temperature_alone_triggers_backoff():
    p = make_params()
    _, _, amps, _ = drive(p, impedance=0.01, temperature=330.0, t_end=16)
    assert amps[-1] == pytest.approx(p.base_amplitude * p.amplitude_step)


def test_amplitude_changes_only_at_pulse_start():
    p = make_params()
    times, _, amps, phases = drive(p, impedance=0.1, temperature=300.0, t_end=200)
    for k in range(1, len(amps)):
        if amps[k] != amps[k - 1]:
            assert phases[k] == "pulse"
            assert times[k] % (p.pulse_duration + p.rest_duration) == pytest.approx(0.0, abs=1e-9)


def test_phase_durations():
    p = make_params(pulse_duration=7.0, rest_duration=3.0)
    dt = 0.25
    times, _, _, phases = drive(p, 0.01, 300.0, 200, dt=dt)
    runs = []
    start = 0
    for k in range(1, len(phases)):
        if phases[k] != phases[k - 1]:
            runs.append((phases[k - 1], times[k] - times[start]))
            start = k
    for phase, length in runs:
        expected = p.pulse_duration if phase == "pulse" else p.rest_duration
        assert abs(length - expected) <= dt + 1e-9


def test_bidirectional_rest_level():
    p = make_params(bidirectional=True, reverse_fraction=0.1, base_amplitude=5.0)
    state = initial_percussive_state(p)
    level, state = next_percussive_level(p, state, FeedbackSample(12.0, 0.045, 300.0))
    assert state.phase == "rest"
    assert level == pytest.approx(-0.5)


@given(
    st.lists(st.tuples(st.floats(0.001, 0.2), st.floats(250.0, 400.0)), min_size=1, max_size=200),
    st.floats(0.0, 1.0),
)
def test_percussive_clamping_and_rest_bounds(feedback, frac):
    p = make_params(bidirectional=True, reverse_fraction=frac)
    state = initial_percussive_state(p)
    for k, (imp, temp) in enumerate(feedback):
        level, state = next_percussive_level(p, state, FeedbackSample(k * 1.3, imp, temp))
        assert p.min_amplitude <= state.amplitude <= p.max_amplitude
        if state.phase == "rest":
            assert level <= 0.0
            assert abs(level) <= frac * p.max_amplitude + 1e-12


def test_percussive_rejects_non_finite_feedback():
    p = make_params()
    state = initial_percussive_state(p)
    with pytest.raises(ProfileError):
        next_percussive_level(p, state, FeedbackSample(0.0, float("nan"), 300.0))
    with pytest.raises(ProfileError):
        next_percussive_level(p, state, FeedbackSample(0.0, 0.01, float("inf")))


def test_percussive_param_invariants():
    with pytest.raises(ProfileError):
        make_params(base_amplitude=10.0)
    with pytest.raises(ProfileError):
        make_params(amplitude_step=1.2)
    with pytest.raises(ProfileError):
        make_params(reverse_fraction=1.5)


def test_cccv_phases():
    prof = CCCV(cc_level=2.0, cv_voltage=4.2, cv_current_floor=0.05)
    assert cccv_level(prof, 3.9, 0.0, ocv=3.8, resistance=0.1) == (2.0, False, False)
    res = cccv_level(prof, 4.2, 10.0, ocv=4.15, resistance=0.1)
    assert res.level == pytest.approx((4.2 - 4.15) / 0.1)
    assert res.cv_phase and not res.complete
    done = cccv_level(prof, 4.25, 20.0, ocv=4.198, resistance=0.1)
    assert done.level <= prof.cv_current_floor
    assert done.complete


def test_cccv_hold_capped_at_cc_level():
    prof = CCCV(cc_level=2.0, cv_voltage=4.2)
    assert cccv_level(prof, 4.3, 0.0, ocv=3.0, resistance=0.1).level == 2.0
