from enum import Enum


class HittingConvention(str, Enum):
    INCLUSIVE = 'inclusive'  # tau_A = min{t >= 0 : X_t in A}
    STRICT = 'strict'        # tau_A = min{t > 0 : X_t in A}


class TimeChangeMode(str, Enum):
    LAZY = 'lazy'
    SKELETON = 'skeleton'
    TRACE = 'trace'
    G = 'G'


class ZooKind(str, Enum):
    CYCLE = 'cycle'
    HYPERCUBE = 'hypercube'
    BIRTH_DEATH = 'birth_death'
    EHRENFEST = 'ehrenfest'
    RANDOM_REVERSIBLE = 'random_reversible'
    FLIP = 'flip'
    LAZY_UNIFORM = 'lazy_uniform'


class AsfFlavor(str, Enum):
    GIBBS = 'gibbs'
    MH = 'mh'


class ProbeFlavor(str, Enum):
    PLAIN = 'plain'
    LAZY_GIBBS = 'lazy_gibbs'
    MH = 'mh'


class ReportFormat(str, Enum):
    CSV = 'csv'
    JSON = 'json'
    PLOTDATA = 'plotdata'


class ExperimentName(str, Enum):
    EQUIVALENCE_SWEEP = 'equivalence-sweep'
    INEQUALITY_AUDIT = 'inequality-audit'
    PERTURBATION_STUDY = 'perturbation-study'
    ASF_STUDY = 'asf-study'
    SAMPLER_FIDELITY = 'sampler-fidelity'
