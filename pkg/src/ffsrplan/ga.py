"""Real-coded GA over the predefined-time pair (m, t_c).

The objective penalizes time spent above a danger joint speed and rejects
outright (infinite cost) any trajectory that touches the hard saturation
wall, on either arm.  Selection is roulette on ``F = 1/(1+B)`` so lower cost
means proportionally higher reproduction odds while rejected individuals get
zero.  One elite survives each generation unchanged, which makes the best
fitness curve non-decreasing.

Fitness evaluations are cached by chromosome and, for the built-in scenario
evaluator, can fan out over a process pool; the genetic operators always
consume a single seeded RNG stream, so reports are reproducible regardless
of evaluation parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .sim import Scenario, TrajectoryLog, run

M_BOUNDS = (0.05, 0.95)
TC_BOUNDS = (0.5, 5.0)


@dataclass(frozen=True)
class Chromosome:
    """One (m, t_c) individual with its raw cost B and selection fitness F."""

    m: float
    t_c: float
    fitness_raw: float | None = None
    selection_fitness: float | None = None

    def genes(self) -> tuple[float, float]:
        return (self.m, self.t_c)


@dataclass(frozen=True)
class GaConfig:
    population: int = 100
    crossover_prob: float = 0.6
    mutation_prob: float = 0.1
    generations: int = 100
    alpha: float = 0.35
    beta: float = 0.65
    gamma: float = 1e-4
    danger_speed_deg: float = 150.0
    max_speed_deg: float = 200.0
    seed: int = 0
    m_bounds: tuple[float, float] = M_BOUNDS
    tc_bounds: tuple[float, float] = TC_BOUNDS
    tc_fixed: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.mutation_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.danger_speed_deg >= self.max_speed_deg:
            raise ValueError("danger threshold must be below the saturation wall")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")


@dataclass
class GaReport:
    """Per-generation curves plus the winning chromosome."""

    generation: np.ndarray
    best_f: np.ndarray
    avg_f: np.ndarray
    best_m: np.ndarray
    best_tc: np.ndarray
    best: Chromosome
    events: list[str] = field(default_factory=list)
    flat_fitness: bool = False
    evaluations: dict[tuple[float, float], tuple[float, float]] = field(
        default_factory=dict
    )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("generation,best_F,avg_F,best_m,best_Tc\n")
            for g, bf, af, bm, bt in zip(
                self.generation, self.best_f, self.avg_f, self.best_m, self.best_tc
            ):
                fh.write(
                    f"{int(g)},{bf:.17g},{af:.17g},{bm:.17g},{bt:.17g}\n"
                )


def max_joint_speed_deg(log: TrajectoryLog) -> float:
    """Largest per-joint speed of either arm over the log, in deg/s."""
    return float(
        np.degrees(max(np.abs(log.dth1).max(), np.abs(log.dth2).max()))
    )


def objective_B(log: TrajectoryLog, cfg: GaConfig) -> float:
    """Joint-velocity cost: danger-weighted integral plus the hard wall.

    Per sample, each arm contributes its per-joint maximum speed (deg/s) when
    that exceeds the danger threshold, integrated by the rectangle rule; any
    sample of either arm beyond the saturation wall rejects the trajectory.
    """
    dt = log.dt
    speed1 = np.degrees(np.abs(log.dth1)).max(axis=1)
    speed2 = np.degrees(np.abs(log.dth2)).max(axis=1)
    if speed1.max(initial=0.0) > cfg.max_speed_deg:
        return math.inf
    if speed2.max(initial=0.0) > cfg.max_speed_deg:
        return math.inf
    pen1 = np.where(speed1 > cfg.danger_speed_deg, speed1, 0.0).sum() * dt
    pen2 = np.where(speed2 > cfg.danger_speed_deg, speed2, 0.0).sum() * dt
    return cfg.gamma * (cfg.alpha * pen1 + cfg.beta * pen2)


def selection_fitness(b: float) -> float:
    """Map raw cost to roulette fitness: F = 1/(1+B), zero for rejections."""
    if math.isinf(b):
        return 0.0
    return 1.0 / (1.0 + b)


def roulette_select(population: list[Chromosome], rng: np.random.Generator) -> Chromosome:
    """Fitness-proportional draw; rejected individuals have zero probability."""
    weights = np.array([c.selection_fitness for c in population], dtype=float)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("roulette selection needs at least one surviving individual")
    pick = rng.random() * total
    acc = 0.0
    for chrom, w in zip(population, weights):
        acc += w
        if pick < acc:
            return chrom
    return population[-1]


def crossover(
    a: Chromosome,
    b: Chromosome,
    p_c: float,
    rng: np.random.Generator,
    genes: tuple[str, ...] = ("m", "t_c"),
) -> tuple[Chromosome, Chromosome]:
    """With probability p_c, swap one randomly chosen gene between the pair."""
    if rng.random() >= p_c:
        return a, b
    gene = genes[rng.integers(len(genes))]
    if gene == "m":
        return (
            Chromosome(b.m, a.t_c),
            Chromosome(a.m, b.t_c),
        )
    return (
        Chromosome(a.m, b.t_c),
        Chromosome(b.m, a.t_c),
    )


def mutate(
    c: Chromosome,
    p_m: float,
    rng: np.random.Generator,
    m_bounds: tuple[float, float] = M_BOUNDS,
    tc_bounds: tuple[float, float] = TC_BOUNDS,
    genes: tuple[str, ...] = ("m", "t_c"),
) -> Chromosome:
    """With probability p_m, redraw one randomly chosen gene in its bounds."""
    if rng.random() >= p_m:
        return c
    gene = genes[rng.integers(len(genes))]
    if gene == "m":
        return Chromosome(rng.uniform(*m_bounds), c.t_c)
    return Chromosome(c.m, rng.uniform(*tc_bounds))


def _evaluate_scenario(scenario: Scenario, cfg: GaConfig, genes: tuple[float, float]):
    """Worker-side evaluation: returns (B, max joint speed deg/s)."""
    m, t_c = genes
    log, _ = run(scenario.with_planner(m=m, t_c=t_c))
    return objective_B(log, cfg), max_joint_speed_deg(log)


def run_ga(cfg: GaConfig, scenario: Scenario, evaluator=None) -> GaReport:
    """Evolve (m, t_c) for ``cfg.generations`` and report the curves.

    ``evaluator`` maps a chromosome to a TrajectoryLog; by default the
    scenario itself is rolled out with the chromosome's parameters.  A
    failing evaluation rejects that individual and the run continues.
    """
    rng = np.random.default_rng(cfg.seed)
    genes = ("m",) if cfg.tc_fixed is not None else ("m", "t_c")
    events: list[str] = []
    cache: dict[tuple[float, float], tuple[float, float]] = {}

    def draw() -> Chromosome:
        m = rng.uniform(*cfg.m_bounds)
        t_c = cfg.tc_fixed if cfg.tc_fixed is not None else rng.uniform(*cfg.tc_bounds)
        return Chromosome(m, t_c)

    def evaluate_all(pop: list[Chromosome]) -> list[Chromosome]:
        pending = sorted(
            {c.genes() for c in pop if c.genes() not in cache}
        )
        if evaluator is not None or cfg.workers <= 1:
            for g in pending:
                cache[g] = _evaluate_one(g)
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = pool.map(
                    _evaluate_scenario,
                    [scenario] * len(pending),
                    [cfg] * len(pending),
                    pending,
                )
                for g, res in zip(pending, results):
                    cache[g] = res
        out = []
        for c in pop:
            b, _speed = cache[c.genes()]
            out.append(
                Chromosome(c.m, c.t_c, fitness_raw=b, selection_fitness=selection_fitness(b))
            )
        return out

    def _evaluate_one(g: tuple[float, float]) -> tuple[float, float]:
        try:
            if evaluator is not None:
                log = evaluator(Chromosome(*g))
                return objective_B(log, cfg), max_joint_speed_deg(log)
            return _evaluate_scenario(scenario, cfg, g)
        except Exception as exc:  # noqa: BLE001 - rejection, not a crash
            events.append(f"evaluation failed for {g}: {exc}")
            return math.inf, math.nan

    population = evaluate_all([draw() for _ in range(cfg.population)])

    gen_idx, best_f, avg_f, best_m, best_tc = [], [], [], [], []

    def record(gen: int, pop: list[Chromosome]) -> Chromosome:
        fitness = np.array([c.selection_fitness for c in pop])
        elite = pop[int(np.argmax(fitness))]
        gen_idx.append(gen)
        best_f.append(float(fitness.max()))
        avg_f.append(float(fitness.mean()))
        best_m.append(elite.m)
        best_tc.append(elite.t_c)
        return elite

    elite = record(0, population)

    for gen in range(1, cfg.generations + 1):
        if sum(c.selection_fitness for c in population) <= 0.0:
            events.append(f"generation {gen}: all individuals rejected, resampling")
            population = evaluate_all([draw() for _ in range(cfg.population)])
            elite = record(gen, population)
            continue
        children: list[Chromosome] = [elite]
        while len(children) < cfg.population:
            p1 = roulette_select(population, rng)
            p2 = roulette_select(population, rng)
            c1, c2 = crossover(p1, p2, cfg.crossover_prob, rng, genes)
            for child in (c1, c2):
                child = mutate(
                    child, cfg.mutation_prob, rng, cfg.m_bounds, cfg.tc_bounds, genes
                )
                if len(children) < cfg.population:
                    children.append(Chromosome(child.m, child.t_c))
        population = evaluate_all(children)
        elite = record(gen, population)

    fitness = np.array([c.selection_fitness for c in population])
    flat = bool(np.allclose(fitness, fitness[0]))
    if flat:
        events.append("degenerate flat fitness in final generation")
    return GaReport(
        generation=np.array(gen_idx),
        best_f=np.array(best_f),
        avg_f=np.array(avg_f),
        best_m=np.array(best_m),
        best_tc=np.array(best_tc),
        best=elite,
        events=events,
        flat_fitness=flat,
        evaluations=cache,
    )
