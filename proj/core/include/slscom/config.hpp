#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace slscom {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonIntegerDimension : ConfigError {
  using ConfigError::ConfigError;
};

// Exact rational, used for compression ratios.
struct Rational {
  long long num = 0;
  long long den = 1;

  double value() const { return static_cast<double>(num) / den; }
  static Rational parse(const std::string& text);  // "2/3" or "0.25" or "1"
  std::string str() const;

 private:
  static Rational parse_impl(const std::string& text);
};

// (CR_s, CR_c): source compression ratio L_s/L_i and channel uses per pixel
// L_c/L_i.  Requires 0 < CR_c <= CR_s <= 1.
struct CrPair {
  Rational cr_s{1, 1};
  Rational cr_c{1, 1};
};

struct OfdmParams {
  int subcarriers = 64;       // K
  int data_symbols = 6;       // N_s
  int pilot_symbols = 2;      // N_p
  int cp_length = 16;         // L_cp
};

struct ChannelParams {
  int path_count = 8;         // L_h
  double decay = 0.25;        // per-tap exponential decay rate
  double snr_db = 0.0;
};

struct DerivedDims {
  long source_len = 0;        // L_i
  long semantic_len = 0;      // L_s
  long channel_len = 0;       // L_c (complex symbols)
  int frames_per_image = 0;
  int class_count = 0;        // N_cls
};

struct TrainHyper {
  double lambda = 0.15;
  double mu = 1.0;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.99;
  int batch_size = 128;
  int epochs_pretrain = 200;
  int epochs_finetune = 60;
  double train_snr_db = 0.0;
};

enum class TrainMode { slscom, slscom_fw, slscom_ds, rscom, tscom, tscom_fw };

const char* to_string(TrainMode m);
TrainMode parse_mode(const std::string& s);

enum class EncoderPreset { desk_cnn, paper_r34, paper_r50 };

const char* to_string(EncoderPreset p);
EncoderPreset parse_preset(const std::string& s);

struct AugmentPolicy {
  double flip_prob = 0.5;
  double jitter_prob = 0.8;
  std::array<double, 4> jitter_strengths{0.4, 0.4, 0.4, 0.1};
  double gray_prob = 0.2;
  int blur_kernel = 3;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  bool color_enabled = true;
};

struct SplitSpec {
  long unlabeled_count = 32000;   // M1
  long labeled_count = 2000;      // M2
  std::set<int> excluded_classes;
  bool per_class_uniform = false;
  double val_fraction = 0.1;
  bool allow_overlap = false;
};

struct JsccSpec {
  int initial_filters = 64;   // N_f
  int channel_filters = 12;   // N_fc
  int sampling_factor = 2;    // N_sa
};

// Full run description.  Immutable after validation; safe to share.
struct ExperimentConfig {
  TrainMode mode = TrainMode::slscom;
  bool no_reconstruction = false;
  bool no_aux_projection = false;
  bool no_color_transforms = false;

  EncoderPreset preset = EncoderPreset::desk_cnn;
  CrPair cr;
  OfdmParams ofdm;
  ChannelParams channel;
  TrainHyper hyper;
  AugmentPolicy augment;
  SplitSpec split;
  JsccSpec jscc;

  int image_channels = 3;
  int image_height = 32;
  int image_width = 32;
  int class_count = 10;
  int projection_dim = 128;   // d_ap

  std::uint64_t seed = 0;
  int repeats_train = 3;
  int repeats_test = 3;
  std::vector<double> test_snr_db{-10, -8, -6, -4, -2, 0, 2};

  std::string data_dir;       // falls back to $SLSCOM_DATA_DIR
  std::string output_dir = "runs";
  std::string pretrained_weights;   // required for tscom* / given for slscom*
  int checkpoint_every = 0;   // epochs; 0 = final only

  // --- presets ---
  static ExperimentConfig paper_preset_large();  // CR (2/3, 1/4), ResNet-50
  static ExperimentConfig paper_preset_small();  // CR (1/6, 1/8), ResNet-34
  static ExperimentConfig desk_preset();         // CR (1/24, 1/32), desk_cnn

  // --- flat key = value config files ---
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);
  void apply_key(const std::string& key, const std::string& value);
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;  // FNV-1a of canonical_text()

  std::string resolved_data_dir() const;
};

DerivedDims derive_dimensions(int channels, int height, int width,
                              const CrPair& cr, const OfdmParams& ofdm);

inline DerivedDims derive_dimensions(const ExperimentConfig& cfg) {
  DerivedDims d = derive_dimensions(cfg.image_channels, cfg.image_height,
                                    cfg.image_width, cfg.cr, cfg.ofdm);
  d.class_count = cfg.class_count;
  return d;
}

// Returns every violated invariant, never just the first.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

}  // namespace slscom
