#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hysmc/model.hpp"

namespace hysmc {

enum class CellType { Epi, Endo, Mid };
enum class CardiacCondition { Healthy, Diseased };
enum class StimulusProfile { Transient, Sustained };

/* Four-mode ventricular cell automaton (state variables u, v, w, s) with
 * mode thresholds theta_o, theta_w, theta_v and the cell-type parameter
 * columns of the minimal ventricular model. See MODEL_NOTES.md for the
 * transcription and time-scale conventions. */
HybridAutomaton cardiac_model(CellType cell, CardiacCondition condition, StimulusProfile stim);

enum class CircadianVariant { Wild, CryMutant, RevErbMutant, NoPerCryDependence };

/* Rate constants k1..k28 for the circadian clock model. The values are not
 * part of the model description here; they ship as an externally sourced
 * configuration (models/circadian_rates.cfg mirrors the built-in table). */
struct CircadianRates {
    std::array<double, 29> k{};  // index 1..28 used
    static CircadianRates defaults();
    static CircadianRates from_file(const std::string& path);
};

/* Sixteen-mode circadian clock automaton: 11 ODE state variables plus the
 * externally driven Clock mRNA input (a square wave). Mode indicator
 * combinations follow the five-threshold table; transitions flip exactly
 * one indicator. */
HybridAutomaton circadian_model(CircadianVariant variant);
HybridAutomaton circadian_model(CircadianVariant variant, const CircadianRates& rates);

enum class CaseStudy { Cardiac, Circadian };

struct PropertyCase {
    std::string id;         // C1..C3, R1, R2
    std::string scenario;   // e.g. "Epicardial, Healthy"
    std::string model_uri;  // builtin:... spec reproducing the scenario
    std::string property;   // ASCII formula text
    bool expected_true;
    long expected_samples;  // 459 for true rows, 1 for false rows
    long horizon;           // K used for the run
};

/* The full verification batch for one case study (16 cardiac rows, 6
 * circadian rows). */
std::vector<PropertyCase> property_suite(CaseStudy study);

/* Resolves "builtin:cardiac?cell=epi&cond=healthy&stim=transient" style
 * URIs; query keys that name a model parameter override its value. */
HybridAutomaton builtin_model(std::string_view uri);

}  // namespace hysmc
