#pragma once

#include <string>

#include "fslab/errors.hpp"

namespace fslab {

enum class EquationTag {
    Heat,
    MeanCurvature,
    HeleShaw,        // d_t h + G(h)(g h + mu kappa) = 0
    Boussinesq,      // d_t h - div(h grad h) = 0
    ThinFilm,        // d_t h + div(h grad lap h) = 0
    ThinFilmGravity, // d_t h - div(g h grad h - mu h grad lap h) = 0
};

struct EquationKind {
    EquationTag tag = EquationTag::Heat;
    double g = 0.0;
    double mu = 0.0;

    static EquationKind heat() { return {EquationTag::Heat}; }
    static EquationKind mean_curvature() { return {EquationTag::MeanCurvature}; }
    static EquationKind hele_shaw(double g, double mu) {
        if (g < 0.0 || mu < 0.0 || (g == 0.0 && mu == 0.0))
            throw DomainError("hele_shaw: need g, mu >= 0 and (g,mu) != (0,0)");
        return {EquationTag::HeleShaw, g, mu};
    }
    static EquationKind boussinesq() { return {EquationTag::Boussinesq}; }
    static EquationKind thin_film() { return {EquationTag::ThinFilm}; }
    static EquationKind thin_film_gravity(double g, double mu) {
        if (g < 0.0 || mu < 0.0 || (g == 0.0 && mu == 0.0))
            throw DomainError("thin_film_gravity: need g, mu >= 0 and (g,mu) != (0,0)");
        return {EquationTag::ThinFilmGravity, g, mu};
    }

    bool needs_positivity() const {
        return tag == EquationTag::Boussinesq || tag == EquationTag::ThinFilm ||
               tag == EquationTag::ThinFilmGravity;
    }
    bool needs_dtn() const { return tag == EquationTag::HeleShaw; }

    std::string name() const {
        switch (tag) {
        case EquationTag::Heat: return "heat";
        case EquationTag::MeanCurvature: return "mean_curvature";
        case EquationTag::HeleShaw:
            return "hele_shaw(g=" + std::to_string(g) + ",mu=" + std::to_string(mu) + ")";
        case EquationTag::Boussinesq: return "boussinesq";
        case EquationTag::ThinFilm: return "thin_film";
        case EquationTag::ThinFilmGravity:
            return "thin_film_gravity(g=" + std::to_string(g) + ",mu=" + std::to_string(mu) + ")";
        }
        return "?";
    }
};

} // namespace fslab
