from .fields import (
    ConstantField,
    ConstantProfile,
    GaussPlusField,
    RationalPlusField,
    ScalarField,
    SinusoidProfile,
    TimeProfile,
    make_field,
    make_profile,
)
