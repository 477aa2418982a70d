"""Psychophysics session engine.

A session presents a shuffled multiset of patterns (each repeated a fixed
number of times) to one subject and records forced-choice answers with
confidence ratings. The flow is a strict state machine: a stimulus must be
answered before the next may be presented. Sessions serialize to JSON
losslessly so a service restart can resume or re-report identical results.
"""

from dataclasses import dataclass, field, replace, asdict
import csv
import json
import random
import time

from .errors import (
    AlreadyAnswered,
    IncompleteSession,
    InvalidConfidence,
    MixedModes,
    ResponsePending,
    SessionComplete,
    WrongTrial,
)
from .patterns import (
    CONTACT_IDS,
    STRETCH_DIRECTIONS,
    PatternLayout,
    contact_stimulus,
    stretch_stimulus,
)
from . import stats

MODES = ("contact", "stretch")
DEFAULT_REPETITIONS = 5
CONFIDENCE_RANGE = (1, 5)


def patterns_for_mode(mode: str):
    if mode == "contact":
        return CONTACT_IDS
    if mode == "stretch":
        return STRETCH_DIRECTIONS
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SessionSpec:
    mode: str
    subject_id: str
    rng_seed: int
    repetitions: int = DEFAULT_REPETITIONS
    training: bool = False
    force_calibration: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0.25 <= self.force_calibration <= 4.0:
            raise ValueError("force_calibration outside plausible range")

    @property
    def patterns(self):
        return patterns_for_mode(self.mode)

    @property
    def trial_count(self) -> int:
        if self.training:
            return len(self.patterns)
        return len(self.patterns) * self.repetitions


@dataclass(frozen=True)
class Trial:
    index: int
    true_pattern: str
    presented_at: float = None
    response: str = None
    confidence: int = None
    response_at: float = None

    @property
    def answered(self) -> bool:
        return self.response is not None

    @property
    def correct(self) -> bool:
        return self.response == self.true_pattern


@dataclass
class Session:
    spec: SessionSpec
    sequence: tuple
    trials: list = field(default_factory=list)
    presented_index: int = None
    created_at: float = field(default_factory=time.time)

    @property
    def complete(self) -> bool:
        if self.spec.training:
            return len(self.trials) >= len(self.sequence) and self.presented_index is None
        return len(self.trials) >= len(self.sequence) and all(t.answered for t in self.trials)

    @property
    def awaiting_response(self) -> bool:
        return self.presented_index is not None


def build_sequence(spec: SessionSpec) -> tuple:
    """Deterministic trial order for a spec.

    Training replays each pattern once in catalog order. Otherwise the
    full multiset (patterns x repetitions) is shuffled by the seeded RNG,
    so the same seed always yields the same order.
    """
    patterns = patterns_for_mode(spec.mode)
    if spec.training:
        return tuple(patterns)
    seq = [p for p in patterns for _ in range(spec.repetitions)]
    random.Random(spec.rng_seed).shuffle(seq)
    return tuple(seq)


def create_session(spec: SessionSpec) -> Session:
    return Session(spec=spec, sequence=build_sequence(spec))


def _stimulus_for(session: Session, pattern_id: str, layout: PatternLayout):
    force = 1.0 * session.spec.force_calibration
    if session.spec.mode == "contact":
        return contact_stimulus(pattern_id, layout=layout, force=force)
    return stretch_stimulus(pattern_id, layout=layout, normal_force=force)


def next_stimulus(session: Session, layout: PatternLayout = None):
    """Advance to the next trial and return (trial_index, stimulus).

    Raises ResponsePending if the current trial has not been answered and
    SessionComplete when the sequence is exhausted. Training sessions have
    no response gate.
    """
    if layout is None:
        layout = PatternLayout()
    if session.awaiting_response:
        raise ResponsePending(
            f"trial {session.presented_index} is awaiting a response")
    nxt = len(session.trials)
    if nxt >= len(session.sequence):
        raise SessionComplete("all trials have been presented")
    pattern = session.sequence[nxt]
    session.trials.append(Trial(index=nxt, true_pattern=pattern,
                                presented_at=time.time()))
    if not session.spec.training:
        session.presented_index = nxt
    return nxt, _stimulus_for(session, pattern, layout)


def record_response(session: Session, trial_index: int, answer: str,
                    confidence: int) -> Trial:
    """Attach the subject's answer to the currently presented trial."""
    if session.spec.training:
        raise WrongTrial("training sessions do not record responses")
    if not isinstance(confidence, int) or isinstance(confidence, bool) \
            or not CONFIDENCE_RANGE[0] <= confidence <= CONFIDENCE_RANGE[1]:
        raise InvalidConfidence(
            f"confidence must be an integer in [1, 5], got {confidence!r}")
    if answer not in session.spec.patterns:
        raise WrongTrial(f"answer {answer!r} is not a pattern of this mode")
    if session.presented_index is None:
        if trial_index < len(session.trials) and session.trials[trial_index].answered:
            raise AlreadyAnswered(f"trial {trial_index} already has a response")
        if len(session.trials) >= len(session.sequence):
            raise SessionComplete("session is complete")
        raise WrongTrial("no trial is currently presented")
    if trial_index != session.presented_index:
        if trial_index < len(session.trials) and session.trials[trial_index].answered:
            raise AlreadyAnswered(f"trial {trial_index} already has a response")
        raise WrongTrial(
            f"expected a response to trial {session.presented_index}, "
            f"got {trial_index}")
    trial = replace(session.trials[trial_index], response=answer,
                    confidence=confidence, response_at=time.time())
    session.trials[trial_index] = trial
    session.presented_index = None
    return trial


def finish_training_trial(session: Session) -> None:
    """Training trials complete as soon as playback ends; nothing to record."""
    if not session.spec.training:
        raise WrongTrial("not a training session")


# ---------------------------------------------------------------------------
# aggregation


def confusion_counts(sessions, patterns):
    idx = {p: i for i, p in enumerate(patterns)}
    counts = [[0] * len(patterns) for _ in patterns]
    for s in sessions:
        for t in s.trials:
            counts[idx[t.true_pattern]][idx[t.response]] += 1
    return counts


def _row_normalize(counts):
    out = []
    for row in counts:
        total = sum(row)
        out.append([c / total if total else 0.0 for c in row])
    return out


def session_rates(session) -> dict:
    """Per-pattern correct-answer rate for one session."""
    totals = {}
    hits = {}
    for t in session.trials:
        totals[t.true_pattern] = totals.get(t.true_pattern, 0) + 1
        if t.correct:
            hits[t.true_pattern] = hits.get(t.true_pattern, 0) + 1
    return {p: hits.get(p, 0) / n for p, n in totals.items()}


def summarize(sessions) -> dict:
    """Pool completed sessions of one mode into a study-level summary.

    Confusion rows are the actual pattern, columns the answer. Per-pattern
    rates are the diagonal of the row-normalized pooled confusion, and the
    per-subject rate vectors feed the omnibus test.
    """
    sessions = list(sessions)
    if not sessions:
        raise IncompleteSession("no sessions to summarize")
    modes = {s.spec.mode for s in sessions}
    if len(modes) > 1:
        raise MixedModes(f"cannot pool modes {sorted(modes)}")
    for s in sessions:
        if s.spec.training:
            raise IncompleteSession(
                f"session for {s.spec.subject_id!r} is a training session")
        if not s.complete:
            raise IncompleteSession(
                f"session for {s.spec.subject_id!r} is not complete")
    mode = next(iter(modes))
    patterns = list(patterns_for_mode(mode))
    counts = confusion_counts(sessions, patterns)
    normalized = _row_normalize(counts)
    per_pattern = {p: normalized[i][i] for i, p in enumerate(patterns)}
    per_subject = {p: [] for p in patterns}
    for s in sessions:
        rates = session_rates(s)
        for p in patterns:
            per_subject[p].append(rates.get(p, 0.0))
    confidences = [t.confidence for s in sessions for t in s.trials]
    trials_total = sum(len(s.trials) for s in sessions)
    correct_total = sum(1 for s in sessions for t in s.trials if t.correct)
    return {
        "mode": mode,
        "patterns": patterns,
        "subjects": [s.spec.subject_id for s in sessions],
        "n_sessions": len(sessions),
        "total_trials": trials_total,
        "confusion_counts": counts,
        "confusion": normalized,
        "per_pattern_rate": per_pattern,
        "mean_rate": correct_total / trials_total,
        "mean_confidence": sum(confidences) / len(confidences),
        "per_subject_rates": per_subject,
    }


def analyze_sessions(sessions, alpha: float = 0.05) -> dict:
    """Summary plus omnibus and pairwise tests across patterns.

    Kruskal-Wallis over per-subject rate vectors, then every pattern pair
    through Mann-Whitney U. Pairwise p-values are reported uncorrected.
    """
    summary = summarize(sessions)
    patterns = summary["patterns"]
    groups = [summary["per_subject_rates"][p] for p in patterns]
    omnibus = stats.kruskal_wallis(groups)
    pairwise = []
    for i in range(len(patterns)):
        for j in range(i + 1, len(patterns)):
            res = stats.mann_whitney_u(groups[i], groups[j])
            pairwise.append({
                "a": patterns[i],
                "b": patterns[j],
                "u": res.statistic,
                "p_value": res.p_value,
                "method": res.method,
                "significant": res.p_value < alpha,
            })
    return {
        "summary": summary,
        "omnibus": {
            "h": omnibus.statistic,
            "df": omnibus.df,
            "p_value": omnibus.p_value,
            "method": omnibus.method,
            "significant": omnibus.p_value < alpha,
        },
        "pairwise": pairwise,
        "alpha": alpha,
        "note": "pairwise p-values are uncorrected",
    }


# ---------------------------------------------------------------------------
# persistence

FORMAT_VERSION = 1


def session_to_json(session: Session) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "spec": asdict(session.spec),
        "sequence": list(session.sequence),
        "trials": [asdict(t) for t in session.trials],
        "presented_index": session.presented_index,
        "created_at": session.created_at,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def session_from_json(text: str) -> Session:
    doc = json.loads(text)
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported session format {doc.get('version')!r}")
    spec = SessionSpec(**doc["spec"])
    session = Session(spec=spec, sequence=tuple(doc["sequence"]),
                      created_at=doc["created_at"])
    session.trials = [Trial(**t) for t in doc["trials"]]
    session.presented_index = doc["presented_index"]
    return session


def save_session(session: Session, path) -> None:
    with open(path, "w") as fh:
        fh.write(session_to_json(session))


def load_session(path) -> Session:
    with open(path) as fh:
        return session_from_json(fh.read())


def trials_to_csv(session: Session, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "true_pattern", "response", "confidence",
                         "correct", "presented_at", "response_at"])
        for t in session.trials:
            writer.writerow([t.index, t.true_pattern, t.response,
                             t.confidence, int(t.correct),
                             t.presented_at, t.response_at])


# ---------------------------------------------------------------------------
# synthetic runs


def run_synthetic_session(spec: SessionSpec, responder, layout=None) -> Session:
    """Run a full session against a synthetic responder, no device attached.

    The responder RNG stream is keyed by (seed, subject) and independent of
    the sequence shuffle, so answer noise never perturbs the trial order.
    """
    from .simulator import responder_rng, subject_ability, synthetic_response

    session = create_session(spec)
    rng = responder_rng(spec.rng_seed, spec.subject_id)
    ability = subject_ability(rng) if responder.subject_spread else 0
    while True:
        try:
            idx, _stim = next_stimulus(session, layout=layout)
        except SessionComplete:
            break
        answer, confidence = synthetic_response(
            responder, session.sequence[idx], rng, ability)
        record_response(session, idx, answer, confidence)
    return session


def run_cohort(mode: str, n_subjects: int, base_seed: int, responder,
               repetitions: int = DEFAULT_REPETITIONS) -> list:
    """One synthetic cohort: n_subjects independent sessions of one mode."""
    sessions = []
    for i in range(n_subjects):
        spec = SessionSpec(mode=mode, subject_id=f"s{i:02d}",
                           rng_seed=base_seed * 1000 + i,
                           repetitions=repetitions)
        sessions.append(run_synthetic_session(spec, responder))
    return sessions
