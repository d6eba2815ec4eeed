"""Chain-based SDDM solvers: centralized, full-communication and R-hop distributed."""
from .chain import (
    C_CONST,
    EPS_TARGET,
    ChainCertificate,
    InverseChain,
    auto_chain,
    build_chain,
    chain_length,
    minimal_certified_length,
    richardson_steps,
    verify_chain,
)
from .distributed import (
    DistributedResult,
    NodeState,
    ParameterError,
    comp0,
    comp1,
    distr_esolve,
    distr_rsolve,
    edist_rsolve,
    rdist_rsolve,
)
from .linalg import (
    Splitting,
    WeightedGraph,
    approx_alpha,
    condition_bound,
    condition_number,
    direct_solve,
    is_eps_approx,
    laplacian_from_graph,
    loewner_leq,
    m_norm,
    standard_splitting,
    validate_sddm,
)
from .reference import ChainCertificateError, materialize_operator, parallel_esolve, parallel_rsolve
from .simnet import CostLedger, Topology, run_protocol

__version__ = "0.1.0"
