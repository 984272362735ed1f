#pragma once

#include "json.hpp"
#include "svs/acoustic_model.h"
#include "svs/dsp_features.h"
#include "svs/synth_corpus.h"
#include "svs/trainer.h"
#include "svs/vocoder.h"

namespace svs {

// Full, deterministic dumps: every field, fixed key set.  Used both for
// config files and for checkpoint-compatibility comparison.
nlohmann::json config_to_json(const FeatureConfig& c);
nlohmann::json config_to_json(const AcousticModelConfig& c);
nlohmann::json config_to_json(const AcousticTrainSpec& c);
nlohmann::json config_to_json(const VocoderConfig& c);
nlohmann::json config_to_json(const VocoderTrainSpec& c);
nlohmann::json config_to_json(const SyntheticCorpusSpec& c);
nlohmann::json stats_to_json(const NormStats& s);

// Partial-override parse: absent keys keep the caller's current values,
// unknown keys are a config error (they are almost always typos).
void config_from_json(const nlohmann::json& j, FeatureConfig& c);
void config_from_json(const nlohmann::json& j, AcousticModelConfig& c);
void config_from_json(const nlohmann::json& j, AcousticTrainSpec& c);
void config_from_json(const nlohmann::json& j, VocoderConfig& c);
void config_from_json(const nlohmann::json& j, VocoderTrainSpec& c);
void config_from_json(const nlohmann::json& j, SyntheticCorpusSpec& c);
NormStats stats_from_json(const nlohmann::json& j);

}  // namespace svs
