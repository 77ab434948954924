#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/config.hpp"
#include "core/types.hpp"

namespace pbench {

enum class Muscle { kGastrocnemius, kObliqueAbdominal };
enum class Side { kLeft, kRight };

const char* MuscleName(Muscle m);
const char* SideName(Side s);

struct EmgChannel {
  std::string name;
  Muscle muscle = Muscle::kGastrocnemius;
  Side side = Side::kLeft;
  std::vector<double> samples;  // mV
};

struct EmgRecord {
  double sample_rate = 2000.0;  // Hz
  std::vector<EmgChannel> channels;

  // Throws InputError: sample rate below 1 kHz, ragged channels, NaNs.
  void Validate() const;
};

// Direct-form-II-transposed second-order section, a0 normalised to 1.
// First-order sections carry b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double DcGain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

// Butterworth band-pass built as a high-pass cascade followed by a low-pass
// cascade, each of order/2, designed so that the forward-backward (zero-phase)
// response is -3 dB at the requested cutoffs.
class BandpassFilter {
 public:
  BandpassFilter(double sample_rate, double low_hz, double high_hz, int order);

  // Zero-phase filtering with odd-extension padding and steady-state initial
  // conditions on both passes.
  std::vector<double> FiltFilt(std::span<const double> x) const;

  // Single causal pass from rest.
  std::vector<double> Filter(std::span<const double> x) const;

  // |H(f)|^2 of the zero-phase (two-pass) filter.
  double ZeroPhasePower(double freq_hz) const;

  const std::vector<Biquad>& sections() const { return sections_; }
  std::size_t PadLength(std::size_t n) const;

 private:
  double sample_rate_;
  double low_hz_;
  std::vector<Biquad> sections_;
};

std::vector<double> Bandpass(std::span<const double> x, double sample_rate,
                             const EmgConfig& cfg = {});
EmgRecord Bandpass(const EmgRecord& record, const EmgConfig& cfg = {});

// Centered moving RMS; windows are truncated at the edges. Output has the
// input's length. Throws InputError when the signal is shorter than a window.
std::vector<double> RmsEnvelope(std::span<const double> x, double sample_rate,
                                double window_s = 0.300);

// Median; even lengths average the two central order statistics.
double Median(std::span<const double> values);
double ChannelLoad(std::span<const double> envelope);

struct ChannelResult {
  std::string name;
  Muscle muscle;
  Side side;
  double load;  // median envelope, mV
};

struct RecordLoads {
  LoadEstimate load;  // leg = gastrocnemius L+R, abd = oblique L+R
  std::vector<ChannelResult> channels;
};

RecordLoads ProcessRecord(const EmgRecord& record, const EmgConfig& cfg = {});

enum class ConditionId { kA, kB, kC, kD };
inline constexpr std::array<ConditionId, 4> kAllConditions = {
    ConditionId::kA, ConditionId::kB, ConditionId::kC, ConditionId::kD};

struct Condition {
  ConditionId id;
  bool pendulum;
  double lat;   // deg
  double thor;  // deg
};

const std::array<Condition, 4>& ConditionTable();
const Condition& GetCondition(ConditionId id);
char ConditionLetter(ConditionId id);
ConditionId ConditionFromLetter(const std::string& s);

struct RatioPair {
  double leg = 0.0;
  double abd = 0.0;
};

struct RatioTable {
  RatioPair b_over_a;
  RatioPair d_over_b;
  RatioPair d_over_c;
  RatioPair d_over_a;
};

using ConditionLoads = std::map<ConditionId, LoadEstimate>;

RatioTable ConditionRatios(const ConditionLoads& loads);

struct SubjectLoads {
  std::string subject;
  ConditionLoads loads;
};

struct RatioReport {
  std::vector<std::string> subjects;
  std::vector<ConditionLoads> loads;
  std::vector<RatioTable> per_subject;
  std::optional<RatioTable> median;  // present with more than one subject
};

RatioReport BuildRatioReport(const std::vector<SubjectLoads>& subjects);

nlohmann::json RatioReportJson(const RatioReport& report);
std::string RatioReportTable(const RatioReport& report);

// EMG CSV: header `t,<muscle>_<side>,...`, seconds / mV. Without a channel
// map the column names themselves are parsed; a channel map is a JSON object
// binding column name -> {"muscle": ..., "side": ...}.
EmgRecord ReadEmgCsv(std::istream& in, const nlohmann::json* channel_map = nullptr);
EmgRecord ReadEmgCsv(const std::string& path, const nlohmann::json* channel_map = nullptr);
void WriteEmgCsv(std::ostream& out, const EmgRecord& record);

}  // namespace pbench
