"""One-step expansion operators A_n and modified generator terms L_n."""

from .bernoulli import bernoulli
from .models import OperatorExpansion, SdeModel
from .operators import (
    a_operators,
    build_expansion,
    closed_form_a_operator,
    generator,
    l_operators,
    modified_generator,
    verify_inverse_relation,
)

__all__ = [
    "OperatorExpansion",
    "SdeModel",
    "a_operators",
    "bernoulli",
    "build_expansion",
    "closed_form_a_operator",
    "generator",
    "l_operators",
    "modified_generator",
    "verify_inverse_relation",
]
