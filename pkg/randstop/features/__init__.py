from randstop.features.links import LINKS, Gumbel, LinkFunction, Logistic, get_link
from randstop.features.monomials import (
    FeatureMap,
    Standardizer,
    build_feature_map,
    monomial_exponents,
)
