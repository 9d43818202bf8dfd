#pragma once

#include "nlq/qtensor.hpp"

namespace nlq {

struct LeslieCoefficients {
    double splus = 0.0;
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0, alpha4 = 0.0, alpha5 = 0.0, alpha6 = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
    double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
};

LeslieCoefficients derive_coefficients(const MaterialParams& p);

struct DissipationSignReport {
    int sign_beta1 = 0, sign_beta2 = 0, sign_beta3 = 0;
    // Smallest eigenvalue of the quadratic form sampled over (d, D), per unit |D|^2.
    double min_eigenvalue = 0.0;
    bool psd = false;
    // Largest |xi| on the scan grid for which the form stays PSD, all other
    // parameters fixed. Equal to xi_scan_max when no violation was found.
    double xi_threshold = 0.0;
    double xi_scan_max = 0.0;
    bool threshold_bounded = false;
};

// Minimum over unit directors d and unit traceless symmetric D of
// alpha4|D|^2 + beta1 (D:dd)^2 + beta3 |D d|^2.
double dissipation_form_min(const LeslieCoefficients& lc);

DissipationSignReport dissipation_sign_report(const LeslieCoefficients& lc, const MaterialParams& p,
                                              double xi_scan_max = 10.0, int xi_scan_steps = 200);

}  // namespace nlq
