"""Pricing toolkit for options on a stock tied to planetary-boundary impact."""

from .analytic import (
    MarketParams,
    Method,
    PriceQuote,
    call_price,
    d1_d2,
    normal_cdf,
    normal_ppf,
    price_pb_option,
    put_price,
    quote,
)
from .errors import (
    AsymmetricMatrixError,
    DegenerateLimitError,
    DegenerateMatrixError,
    DimensionMismatchError,
    EsoptError,
    ScenarioError,
    StabilityError,
    UnpriceableStateError,
)
from .montecarlo import McConfig, mc_price, mc_simulate
from .pb_model import (
    InteractionMatrix,
    PBVector,
    human_impact,
    impact_delta,
    validate_matrix,
)
from .pde import Grid, QuadConfig, fd_price, fd_solve, from_heat, greens_function_price, to_heat
from .scenario import Scenario, load_scenario, run_scenario, strike_from_target
from .stock_mapping import (
    ExtremumReport,
    MappingParams,
    classify_extremum,
    hessian_of_price,
    stock_price,
)

__version__ = "0.1.0"
