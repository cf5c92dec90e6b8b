#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mriq/calibration.hpp"
#include "mriq/estimators.hpp"
#include "mriq/kspace.hpp"
#include "mriq/ruler.hpp"
#include "mriq/synthetic_rater.hpp"

namespace mriq {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetConfig {
  std::vector<std::string> scan_types{"knee-fs", "knee-nfs", "brain-fs", "brain-nfs"};
  int n_train = 200;
  int n_val = 40;
  int n_test = 60;
  int slices_per_subject = 5;
  int m_t = 5;
  int size = 128;
  int n_coils = 4;
  int etl = 8;
  double snr_low_db = 12.0;
  double snr_high_db = 30.0;
  // Noise already present in the "acquired" data, relative to the
  // noise-free phantom recon.
  double acquisition_snr_db = 40.0;
  // Per-subject intensity gain drawn uniformly in +-this many dB.
  double intensity_jitter_db = 6.0;
  HeuristicMethod heuristic = HeuristicMethod::kBlockDct;
  RaterModel rater{};
  double label_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// One unique slice: its m_t noise versions, one motion-corrupted version
/// and the label bookkeeping.
struct SliceRecord {
  std::string slice_id;
  std::string subject_id;
  std::string scan_type;
  int slice_index = 0;
  Split split = Split::kTrain;
  std::vector<std::string> version_files;
  std::string motion_file;
  std::vector<double> level_db;  // effective SNR of each version, clean included
  std::vector<double> heuristic;
  std::optional<std::vector<double>> calibrated;
  std::optional<int> human_label;
};

struct DatasetManifest {
  DatasetConfig config;
  std::vector<SliceRecord> entries;
};

/// SNR of a version injected at `target_db` on top of data that already
/// sits at `acquisition_db` (+inf target = the acquired image itself).
double effective_level_db(double target_db, double acquisition_db);

/// Slice/subject layout and split assignment without any simulation.
/// Subjects are split-disjoint and cycle through the scan types.
std::vector<SliceRecord> plan_dataset(const DatasetConfig& config);

struct SimulatedSlice {
  SliceRecord record;
  std::vector<MagnitudeImage> versions;
  MagnitudeImage motion;
  KSpaceVolume acquired;
};

/// Simulates one planned slice: phantom, coils, acquisition noise, version
/// set, motion-corrupted copy and heuristic scores. Pixels are rounded to
/// float32 so in-memory and on-disk data agree.
SimulatedSlice simulate_slice(const DatasetConfig& config, const SliceRecord& planned, bool keep_kspace = false);

/// All slices in memory, with synthetic rater picks on a subset of the
/// train/val slices (at least one per subject).
std::vector<SimulatedSlice> simulate_dataset(const DatasetConfig& config);

void assign_synthetic_labels(const DatasetConfig& config, std::vector<SliceRecord*>& records);

/// Writes images under <dir>/images and <dir>/manifest.json.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& dir,
                              bool write_kspace = false);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Propagates labels within subjects and calibrates every train/val slice.
/// Returns the anchor mean.
double calibrate_records(std::span<SliceRecord*> records, double eta,
                         CalibrationScope scope = CalibrationScope::kGlobal);

/// The reference slice a scan type's ruler is built from (its own subject,
/// outside every split).
SliceRecord ruler_slice(const DatasetConfig& config, const std::string& scan_type);

/// Ruler for one scan type, built from the acquired data of ruler_slice().
ImageRuler build_dataset_ruler(const DatasetConfig& config, const std::string& scan_type, int m_r,
                               const DbRange& range);

/// Effective SNR levels of a dataset ruler's versions.
std::vector<double> ruler_levels_db(const DatasetConfig& config, const ImageRuler& ruler);

/// Best single global threshold over 100 evenly spaced values between the
/// lowest and highest cached score of all rulers (ties to the lower value).
double single_best_threshold(std::span<const double> raw, const std::vector<bool>& labels,
                             const RulerRegistry& registry);

/// The 100-value grid used by single_best_threshold.
std::vector<double> threshold_grid(const RulerRegistry& registry);

}  // namespace mriq
