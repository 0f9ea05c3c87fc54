#pragma once

#include "fno/field.hpp"

namespace fno {

/// Parameters of the regularised inverse-Heaviside map between volume
/// fraction and reconstructed distance function.
struct RdfParams {
    double epsilon = 1.0;  // smoothing length, grid-spacing units
    double delta = 1e-6;   // clamp margin keeping atanh finite

    void validate() const;
};

/// Property values of the two phases for the mixture rule.
struct PhaseProps {
    double xi_liquid = 0.0;
    double xi_gas = 0.0;
};

/// zeta = epsilon * atanh(1 - 2*clamp(alpha, delta, 1-delta)). Negative in
/// the liquid (alpha > 1/2), positive in the gas, zero on the interface.
/// Throws ValueError when alpha leaves [0,1] by more than 1e-9.
ScalarField2D alpha_to_rdf(const ScalarField2D& alpha, const RdfParams& params);

/// Inverse map alpha = (1 - tanh(zeta/epsilon)) / 2, always in (0, 1).
ScalarField2D rdf_to_alpha(const ScalarField2D& zeta, const RdfParams& params);

/// 1 where zeta < 0 (liquid), 0 elsewhere.
ScalarField2D binarize(const ScalarField2D& zeta);

/// Interface curvature from the distance function: central differences,
/// one-sided at the boundary, gradient-norm floor 1e-12. Positive where
/// the liquid region is convex (a drop of radius R gives +1/R).
ScalarField2D curvature(const ScalarField2D& zeta);

/// Continuum surface-tension force sigma * q * n with n = grad(zeta)/|grad|.
/// Returns a 2-channel batch: channel 0 the x component, channel 1 the y.
FieldBatch surface_tension_force(const ScalarField2D& zeta, double sigma);

/// Pointwise mixture rule alpha*xi_liquid + (1-alpha)*xi_gas.
ScalarField2D mixture_property(const ScalarField2D& alpha, const PhaseProps& props);

}  // namespace fno
