#pragma once

#include "sfrc/tensor.hpp"

namespace sfrc {

/// Closed-form Eshelby tensor of a prolate spheroid (semi-axes a_r, 1, 1) aligned
/// with axis 1, embedded in an isotropic medium with Poisson ratio `nu`.
/// Throws std::invalid_argument for a_r < 1.
SymTensor4 eshelby(double aspect_ratio, double nu);

/// Partial derivative of the Eshelby tensor with respect to `nu`.
SymTensor4 eshelby_nu_derivative(double aspect_ratio, double nu);

/// Shape factor g(a_r) of the prolate spheroid; tends to 2/3 for the sphere.
double spheroid_shape_factor(double aspect_ratio);

}  // namespace sfrc
