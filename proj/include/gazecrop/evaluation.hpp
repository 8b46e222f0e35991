#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazecrop/error.hpp"

namespace gazecrop {

// ---------------------------------------------------------------------------
// Scoring arithmetic
// ---------------------------------------------------------------------------

struct JudgeScores {
  double coverage = 0.0;
  double accuracy = 0.0;
  double details = 0.0;
  double fluency = 0.0;

  friend bool operator==(const JudgeScores&, const JudgeScores&) = default;
};

void validate_scores(const JudgeScores& scores);

/// 0.40 coverage + 0.40 accuracy + 0.15 details + 0.05 fluency, in [0, 10].
double weighted_total(const JudgeScores& scores);

/// Outcome of one judge call, expressed in terms of the candidates (A is the
/// system under test, B the reference system) regardless of presentation
/// order.
enum class OrderResult { kAWins, kBWins, kTie };

/// A's aggregate outcome over both presentation orders.
enum class Verdict { kWin, kTie, kLoss };

std::string_view order_result_name(OrderResult r);
std::string_view verdict_name(Verdict v);
Verdict parse_verdict(std::string_view name);

/// Signed sum of the two orders (+1 A, 0 tie, -1 B): positive is a win,
/// zero a tie, negative a loss.
Verdict aggregate_dual_order(OrderResult order_ab, OrderResult order_ba);

struct PairwiseVerdict {
  OrderResult order_ab = OrderResult::kTie;
  OrderResult order_ba = OrderResult::kTie;
  Verdict aggregate = Verdict::kTie;
};

/// 100 * wins / (wins + losses). Throws AllTies when nothing was decided.
double win_rate(std::int64_t wins, std::int64_t ties, std::int64_t losses);

struct EvalSummary {
  std::int64_t wins = 0;
  std::int64_t ties = 0;
  std::int64_t losses = 0;
  std::optional<double> win_rate_pct;  // empty when every sample tied
  double mean_total_score = 0.0;       // 0 for an empty input
};

EvalSummary summarize(std::span<const Verdict> verdicts, std::span<const double> totals);

// ---------------------------------------------------------------------------
// Judge protocol
// ---------------------------------------------------------------------------

/// External judge service: one prompt in, one completion out. Implementations
/// must tolerate concurrent submit() calls. Transport failures are reported
/// as Error(kJudgeUnavailable).
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string submit(const std::string& prompt_text) = 0;
};

class MalformedJudgeResponse : public Error {
 public:
  MalformedJudgeResponse(const std::string& reason, std::string payload)
      : Error(ErrorCode::kMalformedJudgeResponse, reason), payload_(std::move(payload)) {}

  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

std::string_view judge_rubric_template();
std::string_view judge_rubric_version();

struct JudgeRequest {
  std::string question;
  std::string caption;
  std::string reference_answer;
  std::string answer_a;
  std::string answer_b;
};

/// Renders the rubric with A in the first slot, or B first when swap_order
/// is set.
std::string render_judge_prompt(const JudgeRequest& request, bool swap_order);

/// Parsed response in slot terms: the verdict names the first or second
/// slot, and scores follow slot order.
struct SlotJudgement {
  OrderResult slot_verdict = OrderResult::kTie;  // kAWins = first slot
  JudgeScores first;
  JudgeScores second;
};

SlotJudgement parse_judge_response(std::string_view response);
std::string format_judge_response(const SlotJudgement& judgement);

enum class ScorePolicy { kAbOrderOnly, kMeanOfBoth };

struct JudgeOptions {
  int max_transport_retries = 2;
  ScorePolicy score_policy = ScorePolicy::kAbOrderOnly;
};

/// Append-only JSONL record of every judge exchange. Thread-safe.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);

  void record(std::string_view sample_id, std::string_view order, int attempt,
              std::string_view request, const std::optional<std::string>& response,
              const std::optional<std::string>& error);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct PairJudgement {
  PairwiseVerdict verdict;
  JudgeScores scores_a;
  JudgeScores scores_b;
  std::string raw_ab;
  std::string raw_ba;
};

PairJudgement judge_pair(const JudgeRequest& request, JudgeClient& judge,
                         const JudgeOptions& options = {}, AuditLog* audit = nullptr,
                         std::string_view sample_id = {});

// ---------------------------------------------------------------------------
// Judge implementations
// ---------------------------------------------------------------------------

/// Offline, rule-based judge. It reads the answers back out of the rubric
/// prompt, so it sees exactly what a hosted judge would.
class DeterministicMockJudge final : public JudgeClient {
 public:
  enum class Rule {
    kPreferLonger,  // longer slot wins; winner gets fixed_scores, loser half
    kAlwaysTie,     // TIE, fixed_scores for both slots
    kMalformed,     // free text the parser must reject
    kOverlap,       // word overlap with the reference plus seeded noise
  };

  explicit DeterministicMockJudge(Rule rule = Rule::kOverlap, std::uint64_t seed = 0,
                                  JudgeScores fixed_scores = {7, 7, 7, 7});

  std::string submit(const std::string& prompt_text) override;

 private:
  Rule rule_;
  std::uint64_t seed_;
  JudgeScores fixed_;
};

struct HttpJudgeConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;

  /// GAZECROP_JUDGE_ENDPOINT, GAZECROP_JUDGE_MODEL, GAZECROP_JUDGE_API_KEY.
  static HttpJudgeConfig from_env();
};

/// OpenAI-style chat-completions client.
class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpJudgeConfig config);
  std::string submit(const std::string& prompt_text) override;

 private:
  HttpJudgeConfig config_;
  std::string base_url_;
  std::string path_;
};

/// Stable 64-bit FNV-1a, used wherever seeded determinism must hold across
/// platforms.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

}  // namespace gazecrop
