// Command-line front door: corpus generation, feature extraction, two-stage
// training, synthesis, and objective evaluation over a simple directory
// layout (uttNNN.wav / uttNNN.score.json / uttNNN.feat / lexicon.json /
// norm_stats.json).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "svs/config_json.h"
#include "svs/errors.h"
#include "svs/pipeline.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace svs;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
}

// Config files are sectioned by type; a missing section means defaults.
json section(const json& j, const char* name) {
  if (j.is_null() || !j.contains(name)) return json::object();
  return j.at(name);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create file: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Sorted basenames (without extension) of the *.wav files in a directory.
std::vector<std::string> wav_stems(const std::string& dir) {
  std::vector<std::string> stems;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      stems.push_back(entry.path().stem().string());
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw DataError("no .wav files under " + dir);
  return stems;
}

struct SeedFlag {
  uint64_t value = 0;
  bool given = false;
};

void add_seed_flag(CLI::App* cmd, SeedFlag& seed) {
  cmd->add_option_function<uint64_t>(
      "--seed",
      [&seed](const uint64_t& v) {
        seed.value = v;
        seed.given = true;
      },
      "Override the seed from the config");
}

int run_gen_corpus(const std::string& config_path, const std::string& out_dir,
                   const SeedFlag& seed) {
  SyntheticCorpusSpec spec;
  if (!config_path.empty()) config_from_json(section(load_json_file(config_path), "corpus"), spec);
  if (seed.given) spec.seed = seed.value;
  spec.validate();

  Lexicon lex = builtin_lexicon();
  std::vector<SyntheticUtterance> corpus = generate_corpus(spec, lex);

  fs::create_directories(out_dir);
  write_text(out_dir + "/lexicon.json", lexicon_to_json(lex));
  write_text(out_dir + "/corpus_spec.json", config_to_json(spec).dump(2));
  for (const SyntheticUtterance& utt : corpus) {
    write_wav(out_dir + "/" + utt.name + ".wav", utt.wave);
    write_text(out_dir + "/" + utt.name + ".score.json", score_to_json(utt.score));
  }
  std::cout << "wrote " << corpus.size() << " utterances to " << out_dir << "\n";
  return 0;
}

int run_extract_features(const std::string& config_path, const std::string& data_dir) {
  FeatureConfig fcfg;
  if (!config_path.empty()) config_from_json(section(load_json_file(config_path), "features"), fcfg);

  std::vector<AcousticFeatures> all;
  std::vector<std::string> stems = wav_stems(data_dir);
  for (const std::string& stem : stems) {
    AcousticFeatures feats = extract_features(read_wav(data_dir + "/" + stem + ".wav"), fcfg);
    save_features(data_dir + "/" + stem + ".feat", feats);
    std::cout << stem << ": " << feats.frames() << " frames\n";
    all.push_back(std::move(feats));
  }
  NormStats stats = compute_norm_stats(all);
  save_norm_stats(data_dir + "/norm_stats.json", stats);
  std::cout << "wrote " << stems.size() << " feature files and norm_stats.json ("
            << stats.voiced_frames << " voiced frames)\n";
  return 0;
}

// Shared training-loop scaffolding: per-step JSONL metrics, a console line
// every few percent, rolling checkpoints, and a final save.
template <typename Trainer, typename Corpus>
int run_training(Trainer& trainer, const Corpus& corpus, int64_t steps, int64_t checkpoint_every,
                 const std::string& out_dir, const std::string& snapshot_name) {
  fs::create_directories(out_dir);
  const std::string snap_path = out_dir + "/" + snapshot_name;
  std::ofstream log(out_dir + "/" + snapshot_name + ".metrics.jsonl", std::ios::trunc);
  if (!log) throw IoError("cannot create metrics log under " + out_dir);

  const int64_t report_every = std::max<int64_t>(1, steps / 20);
  for (int64_t i = 0; i < steps; ++i) {
    TrainMetrics m = trainer.step(corpus);
    log << metrics_json_line(m) << "\n";
    if (m.step % checkpoint_every == 0) trainer.save(snap_path);
    if (m.step % report_every == 0 || m.step == steps)
      std::cout << "step " << m.step << "/" << steps << "  total " << m.total << "  ema "
                << m.ema_total << (m.gate_on ? "  [adversarial]" : "") << "\n";
  }
  trainer.save(snap_path);
  std::cout << "saved " << snap_path << "\n";
  return 0;
}

int run_train_acoustic(const std::string& config_path, const std::string& data_dir,
                       const std::string& out_dir, const SeedFlag& seed) {
  json cfg = config_path.empty() ? json::object() : load_json_file(config_path);
  FeatureConfig fcfg;
  config_from_json(section(cfg, "features"), fcfg);
  AcousticModelConfig mcfg;
  config_from_json(section(cfg, "model"), mcfg);
  AcousticTrainSpec spec;
  config_from_json(section(cfg, "train"), spec);
  if (seed.given) spec.seed = seed.value;

  Lexicon lex = lexicon_from_json(read_text(data_dir + "/lexicon.json"));
  NormStats stats = load_norm_stats(data_dir + "/norm_stats.json");
  std::vector<AcousticTrainItem> items;
  for (const std::string& stem : wav_stems(data_dir)) {
    AcousticTrainItem item;
    item.name = stem;
    item.seq = encode_score(score_from_json(read_text(data_dir + "/" + stem + ".score.json")), lex,
                            fcfg.hop_seconds);
    item.feats = load_features(data_dir + "/" + stem + ".feat");
    validate_acoustic_item(item);
    items.push_back(std::move(item));
  }

  AcousticTrainer trainer(mcfg, static_cast<int64_t>(lex.phonemes.size()), spec, stats);
  return run_training(trainer, items, spec.steps, spec.checkpoint_every, out_dir,
                      "acoustic.snap");
}

int run_train_vocoder(const std::string& config_path, const std::string& data_dir,
                      const std::string& out_dir, const SeedFlag& seed) {
  json cfg = config_path.empty() ? json::object() : load_json_file(config_path);
  FeatureConfig fcfg;
  config_from_json(section(cfg, "features"), fcfg);
  VocoderConfig vcfg;
  config_from_json(section(cfg, "model"), vcfg);
  VocoderTrainSpec spec;
  config_from_json(section(cfg, "train"), spec);
  if (seed.given) spec.seed = seed.value;

  NormStats stats = load_norm_stats(data_dir + "/norm_stats.json");
  std::vector<VocoderTrainItem> items;
  for (const std::string& stem : wav_stems(data_dir)) {
    VocoderTrainItem item;
    item.name = stem;
    AcousticFeatures feats = load_features(data_dir + "/" + stem + ".feat");
    item.cond = build_conditioning(feats, stats);
    Waveform wave = read_wav(data_dir + "/" + stem + ".wav");
    item.samples = Tensor({static_cast<int64_t>(wave.samples.size()), 1});
    std::copy(wave.samples.begin(), wave.samples.end(), item.samples.data());
    validate_vocoder_item(item, vcfg.hop_samples, vcfg.aux_dims());
    items.push_back(std::move(item));
  }

  VocoderTrainer trainer(vcfg, spec);
  return run_training(trainer, items, spec.steps, spec.checkpoint_every, out_dir, "vocoder.snap");
}

int run_synthesize(const std::string& score_path, const std::string& lexicon_path,
                   const std::string& acoustic_path, const std::string& vocoder_path,
                   const std::string& out_path, double sample_rate, double hop_seconds,
                   const SeedFlag& seed) {
  Score score = score_from_json(read_text(score_path));
  Lexicon lex = lexicon_from_json(read_text(lexicon_path));
  AcousticInference acoustic(acoustic_path);
  VocoderInference vocoder(vocoder_path);

  SynthesisRequest req;
  req.sample_rate = sample_rate;
  req.hop_seconds = hop_seconds;
  if (seed.given) req.seed = seed.value;
  Waveform wave = synthesize(score, lex, acoustic, vocoder, req);
  write_wav(out_path, wave);
  std::cout << "wrote " << out_path << " ("
            << static_cast<double>(wave.samples.size()) / wave.sample_rate << " s)\n";
  return 0;
}

int run_evaluate(const std::string& config_path, const std::string& pred_path,
                 const std::string& ref_path, const std::string& out_path) {
  FeatureConfig fcfg;
  if (!config_path.empty()) config_from_json(section(load_json_file(config_path), "features"), fcfg);

  std::vector<EvalUtterance> utterances;
  if (fs::is_directory(pred_path) && fs::is_directory(ref_path)) {
    std::vector<std::string> pred_stems = wav_stems(pred_path);
    std::vector<std::string> ref_stems = wav_stems(ref_path);
    for (const std::string& stem : pred_stems) {
      if (std::find(ref_stems.begin(), ref_stems.end(), stem) == ref_stems.end()) continue;
      AcousticFeatures pred = extract_features(read_wav(pred_path + "/" + stem + ".wav"), fcfg);
      AcousticFeatures ref = extract_features(read_wav(ref_path + "/" + stem + ".wav"), fcfg);
      EvalUtterance u;
      u.name = stem;
      u.frames = std::min(pred.frames(), ref.frames());
      u.metrics = evaluate_features(pred, ref);
      utterances.push_back(std::move(u));
    }
    if (utterances.empty()) throw DataError("no matching .wav names between the two directories");
  } else {
    AcousticFeatures pred = extract_features(read_wav(pred_path), fcfg);
    AcousticFeatures ref = extract_features(read_wav(ref_path), fcfg);
    EvalUtterance u;
    u.name = fs::path(pred_path).stem().string();
    u.frames = std::min(pred.frames(), ref.frames());
    u.metrics = evaluate_features(pred, ref);
    utterances.push_back(std::move(u));
  }

  std::string report = report_to_json(make_report(std::move(utterances)));
  if (!out_path.empty()) write_text(out_path, report);
  std::cout << report << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singing-voice synthesis toolkit: score-driven acoustic model plus neural vocoder"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, out_path;
  std::string score_path, lexicon_path, acoustic_path, vocoder_path, pred_path, ref_path;
  double sample_rate = 48000.0, hop_seconds = 0.005;
  SeedFlag seed;

  CLI::App* gen = app.add_subcommand("gen-corpus", "Generate a synthetic singing corpus");
  gen->add_option("--config", config_path, "JSON config with a \"corpus\" section");
  gen->add_option("--out", out_dir, "Output directory")->required();
  add_seed_flag(gen, seed);

  CLI::App* ext = app.add_subcommand("extract-features", "Extract features for every corpus WAV");
  ext->add_option("--config", config_path, "JSON config with a \"features\" section");
  ext->add_option("--data", data_dir, "Corpus directory")->required();

  CLI::App* ta = app.add_subcommand("train-acoustic", "Train the score-to-features model");
  ta->add_option("--config", config_path, "JSON config: features/model/train sections");
  ta->add_option("--data", data_dir, "Corpus directory")->required();
  ta->add_option("--out", out_dir, "Run directory for snapshots and metrics")->required();
  add_seed_flag(ta, seed);

  CLI::App* tv = app.add_subcommand("train-vocoder", "Train the features-to-waveform model");
  tv->add_option("--config", config_path, "JSON config: features/model/train sections");
  tv->add_option("--data", data_dir, "Corpus directory")->required();
  tv->add_option("--out", out_dir, "Run directory for snapshots and metrics")->required();
  add_seed_flag(tv, seed);

  CLI::App* syn = app.add_subcommand("synthesize", "Render a score through both stages");
  syn->add_option("--score", score_path, "Score JSON")->required();
  syn->add_option("--lexicon", lexicon_path, "Lexicon JSON")->required();
  syn->add_option("--acoustic", acoustic_path, "Acoustic snapshot")->required();
  syn->add_option("--vocoder", vocoder_path, "Vocoder snapshot")->required();
  syn->add_option("--out", out_path, "Output WAV path")->required();
  syn->add_option("--sample-rate", sample_rate, "Output sample rate (default 48000)");
  syn->add_option("--hop", hop_seconds, "Frame hop in seconds (default 0.005)");
  add_seed_flag(syn, seed);

  CLI::App* ev = app.add_subcommand("evaluate", "Compare predicted audio against a reference");
  ev->add_option("--config", config_path, "JSON config with a \"features\" section");
  ev->add_option("--pred", pred_path, "Predicted WAV file or directory")->required();
  ev->add_option("--ref", ref_path, "Reference WAV file or directory")->required();
  ev->add_option("--out", out_path, "Also write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_corpus(config_path, out_dir, seed);
    if (ext->parsed()) return run_extract_features(config_path, data_dir);
    if (ta->parsed()) return run_train_acoustic(config_path, data_dir, out_dir, seed);
    if (tv->parsed()) return run_train_vocoder(config_path, data_dir, out_dir, seed);
    if (syn->parsed())
      return run_synthesize(score_path, lexicon_path, acoustic_path, vocoder_path, out_path,
                            sample_rate, hop_seconds, seed);
    if (ev->parsed()) return run_evaluate(config_path, pred_path, ref_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
