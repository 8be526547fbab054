"""Exact computations with themes: monogenic regular (a,b)-modules with one Jordan-Hoelder sequence."""

from .coeff_core import BSeries, TPoly, series_derivative, series_inverse, series_mul, solve_euler
from .errors import ThemeError
from .families import (
    canonical_family,
    rank2_normal_form,
    rank_stratify,
    sweep_invariance,
)
from .hom_engine import (
    end_dimension,
    ext_dimensions,
    find_injection,
    is_invariant,
    isomorphic,
    property_u,
)
from .op_algebra import OpPoly, StandardWord, op_apply_xi, op_divide_right, op_normalize_mul, word_expand
from .parser import format_xi, parse_series, parse_word, parse_xi
from .theme_core import (
    FundamentalInvariants,
    ThemePresentation,
    bernstein_element,
    bernstein_roots,
    canonical_form,
    decompose_against,
    dual_twist,
    embed_in_xi,
    from_generator,
    quotient,
    rank2_parameter,
    submodule,
    tensor_rank1,
    validate,
    vspace,
)
from .xi_space import (
    GeneratedModule,
    XiElement,
    XiMultiElement,
    component_split,
    filtration_member,
    generate_module,
    monodromy_defect,
    solve_shift,
    xi_apply_a,
)

__version__ = "0.1.0"

__all__ = [
    "BSeries", "TPoly", "series_mul", "series_inverse", "series_derivative", "solve_euler",
    "ThemeError",
    "OpPoly", "StandardWord", "op_normalize_mul", "op_divide_right", "word_expand", "op_apply_xi",
    "XiElement", "XiMultiElement", "GeneratedModule", "xi_apply_a", "generate_module",
    "filtration_member", "solve_shift", "component_split", "monodromy_defect",
    "ThemePresentation", "FundamentalInvariants", "validate", "from_generator", "embed_in_xi",
    "bernstein_element", "bernstein_roots", "vspace", "decompose_against", "canonical_form",
    "quotient", "submodule", "dual_twist", "tensor_rank1", "rank2_parameter",
    "find_injection", "is_invariant", "isomorphic", "end_dimension", "ext_dimensions", "property_u",
    "canonical_family", "sweep_invariance", "rank_stratify", "rank2_normal_form",
    "parse_xi", "parse_series", "parse_word", "format_xi",
]
