#include "slscom/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "slscom/rng.hpp"

namespace slscom {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("not a boolean: " + v);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Rational Rational::parse(const std::string& text) {
  try {
    return parse_impl(text);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("malformed rational: " + text);
  }
}

Rational Rational::parse_impl(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational r;
    r.num = std::stoll(trim(text.substr(0, slash)));
    r.den = std::stoll(trim(text.substr(slash + 1)));
    if (r.den == 0) throw ConfigError("rational with zero denominator: " + text);
    long long g = std::gcd(r.num, r.den);
    if (g > 1) { r.num /= g; r.den /= g; }
    return r;
  }
  if (text.find('.') != std::string::npos) {
    // decimal; denominator is a power of ten
    double v = std::stod(text);
    long long den = 1;
    double scaled = v;
    while (std::abs(scaled - std::llround(scaled)) > 1e-12 && den < 1000000000LL) {
      den *= 10;
      scaled = v * den;
    }
    Rational r{std::llround(scaled), den};
    long long g = std::gcd(r.num, r.den);
    if (g > 1) { r.num /= g; r.den /= g; }
    return r;
  }
  return Rational{std::stoll(text), 1};
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::slscom: return "slscom";
    case TrainMode::slscom_fw: return "slscom_fw";
    case TrainMode::slscom_ds: return "slscom_ds";
    case TrainMode::rscom: return "rscom";
    case TrainMode::tscom: return "tscom";
    case TrainMode::tscom_fw: return "tscom_fw";
  }
  return "?";
}

TrainMode parse_mode(const std::string& s) {
  for (TrainMode m : {TrainMode::slscom, TrainMode::slscom_fw,
                      TrainMode::slscom_ds, TrainMode::rscom, TrainMode::tscom,
                      TrainMode::tscom_fw})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown mode: " + s);
}

const char* to_string(EncoderPreset p) {
  switch (p) {
    case EncoderPreset::desk_cnn: return "desk_cnn";
    case EncoderPreset::paper_r34: return "paper_r34";
    case EncoderPreset::paper_r50: return "paper_r50";
  }
  return "?";
}

EncoderPreset parse_preset(const std::string& s) {
  for (EncoderPreset p : {EncoderPreset::desk_cnn, EncoderPreset::paper_r34,
                          EncoderPreset::paper_r50})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown encoder preset: " + s);
}

DerivedDims derive_dimensions(int channels, int height, int width,
                              const CrPair& cr, const OfdmParams& ofdm) {
  DerivedDims d;
  d.source_len = static_cast<long>(channels) * height * width;
  if (d.source_len <= 0) throw ConfigError("empty image shape");

  auto exact = [&](const Rational& r, const char* what) -> long {
    long long prod = r.num * d.source_len;
    if (r.den == 0 || prod % r.den != 0)
      throw NonIntegerDimension(std::string(what) + " * L_i = " + r.str() +
                                " * " + std::to_string(d.source_len) +
                                " is not an integer");
    long v = static_cast<long>(prod / r.den);
    if (v <= 0) throw NonIntegerDimension(std::string(what) + " yields a zero length");
    return v;
  };
  d.semantic_len = exact(cr.cr_s, "cr_s");
  d.channel_len = exact(cr.cr_c, "cr_c");

  long per_frame = static_cast<long>(ofdm.subcarriers) * ofdm.data_symbols;
  d.frames_per_image = static_cast<int>((d.channel_len + per_frame - 1) / per_frame);
  return d;
}

ExperimentConfig ExperimentConfig::paper_preset_large() {
  ExperimentConfig c;
  c.preset = EncoderPreset::paper_r50;
  c.cr = {Rational{2, 3}, Rational{1, 4}};
  c.jscc = {64, 12, 2};
  c.hyper.lambda = 0.15;
  c.split.unlabeled_count = 32000;
  return c;
}

ExperimentConfig ExperimentConfig::paper_preset_small() {
  ExperimentConfig c;
  c.preset = EncoderPreset::paper_r34;
  c.cr = {Rational{1, 6}, Rational{1, 8}};
  c.jscc = {32, 6, 1};
  c.hyper.lambda = 0.1;
  c.split.unlabeled_count = 32000;
  return c;
}

ExperimentConfig ExperimentConfig::desk_preset() {
  ExperimentConfig c;
  c.preset = EncoderPreset::desk_cnn;
  c.cr = {Rational{1, 24}, Rational{1, 32}};
  c.jscc = {32, 8, 1};
  c.hyper.lambda = 0.1;
  c.hyper.epochs_pretrain = 40;
  c.hyper.epochs_finetune = 30;
  c.hyper.lr = 1e-3;
  c.split.unlabeled_count = 5000;
  c.split.labeled_count = 2000;
  return c;
}

void ExperimentConfig::apply_key(const std::string& key, const std::string& value) {
  if (key == "mode") mode = parse_mode(value);
  else if (key == "no_reconstruction") no_reconstruction = parse_bool(value);
  else if (key == "no_aux_projection") no_aux_projection = parse_bool(value);
  else if (key == "no_color_transforms") no_color_transforms = parse_bool(value);
  else if (key == "preset") preset = parse_preset(value);
  else if (key == "cr_s") cr.cr_s = Rational::parse(value);
  else if (key == "cr_c") cr.cr_c = Rational::parse(value);
  else if (key == "subcarriers") ofdm.subcarriers = std::stoi(value);
  else if (key == "data_symbols") ofdm.data_symbols = std::stoi(value);
  else if (key == "pilot_symbols") ofdm.pilot_symbols = std::stoi(value);
  else if (key == "cp_length") ofdm.cp_length = std::stoi(value);
  else if (key == "path_count") channel.path_count = std::stoi(value);
  else if (key == "path_decay") channel.decay = std::stod(value);
  else if (key == "lambda") hyper.lambda = std::stod(value);
  else if (key == "mu") hyper.mu = std::stod(value);
  else if (key == "lr") hyper.lr = std::stod(value);
  else if (key == "beta1") hyper.beta1 = std::stod(value);
  else if (key == "beta2") hyper.beta2 = std::stod(value);
  else if (key == "batch_size") hyper.batch_size = std::stoi(value);
  else if (key == "epochs_pretrain") hyper.epochs_pretrain = std::stoi(value);
  else if (key == "epochs_finetune") hyper.epochs_finetune = std::stoi(value);
  else if (key == "train_snr_db") hyper.train_snr_db = std::stod(value);
  else if (key == "flip_prob") augment.flip_prob = std::stod(value);
  else if (key == "jitter_prob") augment.jitter_prob = std::stod(value);
  else if (key == "jitter_brightness") augment.jitter_strengths[0] = std::stod(value);
  else if (key == "jitter_contrast") augment.jitter_strengths[1] = std::stod(value);
  else if (key == "jitter_saturation") augment.jitter_strengths[2] = std::stod(value);
  else if (key == "jitter_hue") augment.jitter_strengths[3] = std::stod(value);
  else if (key == "gray_prob") augment.gray_prob = std::stod(value);
  else if (key == "blur_kernel") augment.blur_kernel = std::stoi(value);
  else if (key == "blur_sigma_min") augment.blur_sigma_min = std::stod(value);
  else if (key == "blur_sigma_max") augment.blur_sigma_max = std::stod(value);
  else if (key == "color_enabled") augment.color_enabled = parse_bool(value);
  else if (key == "unlabeled_count") split.unlabeled_count = std::stol(value);
  else if (key == "labeled_count") split.labeled_count = std::stol(value);
  else if (key == "excluded_classes") {
    split.excluded_classes.clear();
    for (auto& t : split_commas(value)) split.excluded_classes.insert(std::stoi(t));
  }
  else if (key == "per_class_uniform") split.per_class_uniform = parse_bool(value);
  else if (key == "val_fraction") split.val_fraction = std::stod(value);
  else if (key == "allow_overlap") split.allow_overlap = parse_bool(value);
  else if (key == "initial_filters") jscc.initial_filters = std::stoi(value);
  else if (key == "channel_filters") jscc.channel_filters = std::stoi(value);
  else if (key == "sampling_factor") jscc.sampling_factor = std::stoi(value);
  else if (key == "image_channels") image_channels = std::stoi(value);
  else if (key == "image_height") image_height = std::stoi(value);
  else if (key == "image_width") image_width = std::stoi(value);
  else if (key == "class_count") class_count = std::stoi(value);
  else if (key == "projection_dim") projection_dim = std::stoi(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "repeats_train") repeats_train = std::stoi(value);
  else if (key == "repeats_test") repeats_test = std::stoi(value);
  else if (key == "test_snr_db") {
    test_snr_db.clear();
    for (auto& t : split_commas(value)) test_snr_db.push_back(std::stod(t));
  }
  else if (key == "data_dir") data_dir = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "pretrained_weights") pretrained_weights = value;
  else if (key == "checkpoint_every") checkpoint_every = std::stoi(value);
  else throw ConfigError("unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    // a bare "preset" line seeds all preset defaults first
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "base") {
      if (value == "paper_large") cfg = paper_preset_large();
      else if (value == "paper_small") cfg = paper_preset_small();
      else if (value == "desk") cfg = desk_preset();
      else throw ConfigError("unknown base preset: " + value);
      continue;
    }
    cfg.apply_key(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  os << "mode = " << to_string(mode) << "\n";
  os << "no_reconstruction = " << (no_reconstruction ? "true" : "false") << "\n";
  os << "no_aux_projection = " << (no_aux_projection ? "true" : "false") << "\n";
  os << "no_color_transforms = " << (no_color_transforms ? "true" : "false") << "\n";
  os << "preset = " << to_string(preset) << "\n";
  os << "cr_s = " << cr.cr_s.str() << "\n";
  os << "cr_c = " << cr.cr_c.str() << "\n";
  os << "subcarriers = " << ofdm.subcarriers << "\n";
  os << "data_symbols = " << ofdm.data_symbols << "\n";
  os << "pilot_symbols = " << ofdm.pilot_symbols << "\n";
  os << "cp_length = " << ofdm.cp_length << "\n";
  os << "path_count = " << channel.path_count << "\n";
  os << "path_decay = " << fmt_double(channel.decay) << "\n";
  os << "lambda = " << fmt_double(hyper.lambda) << "\n";
  os << "mu = " << fmt_double(hyper.mu) << "\n";
  os << "lr = " << fmt_double(hyper.lr) << "\n";
  os << "beta1 = " << fmt_double(hyper.beta1) << "\n";
  os << "beta2 = " << fmt_double(hyper.beta2) << "\n";
  os << "batch_size = " << hyper.batch_size << "\n";
  os << "epochs_pretrain = " << hyper.epochs_pretrain << "\n";
  os << "epochs_finetune = " << hyper.epochs_finetune << "\n";
  os << "train_snr_db = " << fmt_double(hyper.train_snr_db) << "\n";
  os << "flip_prob = " << fmt_double(augment.flip_prob) << "\n";
  os << "jitter_prob = " << fmt_double(augment.jitter_prob) << "\n";
  os << "jitter_brightness = " << fmt_double(augment.jitter_strengths[0]) << "\n";
  os << "jitter_contrast = " << fmt_double(augment.jitter_strengths[1]) << "\n";
  os << "jitter_saturation = " << fmt_double(augment.jitter_strengths[2]) << "\n";
  os << "jitter_hue = " << fmt_double(augment.jitter_strengths[3]) << "\n";
  os << "gray_prob = " << fmt_double(augment.gray_prob) << "\n";
  os << "blur_kernel = " << augment.blur_kernel << "\n";
  os << "blur_sigma_min = " << fmt_double(augment.blur_sigma_min) << "\n";
  os << "blur_sigma_max = " << fmt_double(augment.blur_sigma_max) << "\n";
  os << "color_enabled = " << (augment.color_enabled ? "true" : "false") << "\n";
  os << "unlabeled_count = " << split.unlabeled_count << "\n";
  os << "labeled_count = " << split.labeled_count << "\n";
  os << "excluded_classes = ";
  bool first = true;
  for (int c : split.excluded_classes) {
    if (!first) os << ",";
    os << c;
    first = false;
  }
  os << "\n";
  os << "per_class_uniform = " << (split.per_class_uniform ? "true" : "false") << "\n";
  os << "val_fraction = " << fmt_double(split.val_fraction) << "\n";
  os << "allow_overlap = " << (split.allow_overlap ? "true" : "false") << "\n";
  os << "initial_filters = " << jscc.initial_filters << "\n";
  os << "channel_filters = " << jscc.channel_filters << "\n";
  os << "sampling_factor = " << jscc.sampling_factor << "\n";
  os << "image_channels = " << image_channels << "\n";
  os << "image_height = " << image_height << "\n";
  os << "image_width = " << image_width << "\n";
  os << "class_count = " << class_count << "\n";
  os << "projection_dim = " << projection_dim << "\n";
  os << "seed = " << seed << "\n";
  os << "repeats_train = " << repeats_train << "\n";
  os << "repeats_test = " << repeats_test << "\n";
  os << "test_snr_db = ";
  first = true;
  for (double v : test_snr_db) {
    if (!first) os << ",";
    os << fmt_double(v);
    first = false;
  }
  os << "\n";
  os << "data_dir = " << data_dir << "\n";
  os << "output_dir = " << output_dir << "\n";
  os << "pretrained_weights = " << pretrained_weights << "\n";
  os << "checkpoint_every = " << checkpoint_every << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::fingerprint() const {
  return fnv1a64(canonical_text());
}

std::string ExperimentConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("SLSCOM_DATA_DIR")) return env;
  return "";
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };

  const auto& cr = cfg.cr;
  check(cr.cr_c.value() > 0, "cr_c must be positive");
  check(cr.cr_s.value() <= 1.0, "cr_s must be <= 1");
  check(cr.cr_c.value() <= cr.cr_s.value(), "cr_c must be <= cr_s");

  const auto& o = cfg.ofdm;
  check(o.subcarriers >= 2 && (o.subcarriers & (o.subcarriers - 1)) == 0,
        "subcarriers must be a power of two >= 2");
  check(o.data_symbols >= 1, "data_symbols must be >= 1");
  check(o.pilot_symbols >= 1, "pilot_symbols must be >= 1");
  check(o.cp_length >= cfg.channel.path_count - 1,
        "CP shorter than channel memory");
  check(cfg.channel.path_count >= 1, "path_count must be >= 1");

  const auto& h = cfg.hyper;
  check(h.lambda >= 0, "lambda must be >= 0");
  check(h.mu > 0, "mu must be > 0");
  check(h.lr > 0, "lr must be > 0");
  check(h.beta1 >= 0 && h.beta1 < 1, "beta1 must be in [0,1)");
  check(h.beta2 >= 0 && h.beta2 < 1, "beta2 must be in [0,1)");
  check(h.batch_size >= 1, "batch_size must be >= 1");

  const auto& a = cfg.augment;
  for (double p : {a.flip_prob, a.jitter_prob, a.gray_prob})
    check(p >= 0 && p <= 1, "augment probabilities must be in [0,1]");
  check(a.blur_kernel % 2 == 1, "blur kernel must be odd");

  check(cfg.split.val_fraction >= 0 && cfg.split.val_fraction < 1,
        "val_fraction must be in [0,1)");
  check(cfg.split.unlabeled_count >= 1, "unlabeled_count must be >= 1");
  check(cfg.split.labeled_count >= 1, "labeled_count must be >= 1");
  for (int c : cfg.split.excluded_classes)
    check(c >= 0 && c < cfg.class_count, "excluded class out of range");

  check(cfg.jscc.initial_filters >= 1, "initial_filters must be >= 1");
  check(cfg.jscc.channel_filters >= 1, "channel_filters must be >= 1");
  check(cfg.jscc.sampling_factor >= 1, "sampling_factor must be >= 1");

  if (cfg.mode == TrainMode::tscom || cfg.mode == TrainMode::tscom_fw)
    check(!cfg.pretrained_weights.empty(),
          "mode " + std::string(to_string(cfg.mode)) +
              " requires a pretrained_weights path");

  try {
    auto d = derive_dimensions(cfg);
    check(d.semantic_len > 0 && d.channel_len > 0, "derived lengths must be positive");
    // encoder preset fixes L_s
    long want = cfg.preset == EncoderPreset::paper_r50 ? 2048
               : cfg.preset == EncoderPreset::paper_r34 ? 512
                                                        : 128;
    check(d.semantic_len == want,
          "preset " + std::string(to_string(cfg.preset)) + " emits L_s=" +
              std::to_string(want) + " but cr_s yields " +
              std::to_string(d.semantic_len));
  } catch (const std::exception& e) {
    errs.push_back(e.what());
  }

  check(cfg.repeats_train >= 1 && cfg.repeats_test >= 1,
        "repeat counts must be >= 1");
  check(!cfg.test_snr_db.empty(), "test_snr_db must not be empty");
  return errs;
}

}  // namespace slscom
