#include "gazecrop/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gazecrop/generated/judge_rubric.hpp"

namespace gazecrop {

void validate_scores(const JudgeScores& s) {
  for (double v : {s.coverage, s.accuracy, s.details, s.fluency}) {
    if (!(v >= 0.0 && v <= 10.0)) {
      throw Error(ErrorCode::kOutOfRange, "judge score " + std::to_string(v) + " outside [0, 10]");
    }
  }
}

double weighted_total(const JudgeScores& s) {
  validate_scores(s);
  return 0.40 * s.coverage + 0.40 * s.accuracy + 0.15 * s.details + 0.05 * s.fluency;
}

std::string_view order_result_name(OrderResult r) {
  switch (r) {
    case OrderResult::kAWins: return "A";
    case OrderResult::kBWins: return "B";
    case OrderResult::kTie: return "TIE";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kWin: return "win";
    case Verdict::kTie: return "tie";
    case Verdict::kLoss: return "loss";
  }
  return "?";
}

Verdict parse_verdict(std::string_view name) {
  if (name == "win") return Verdict::kWin;
  if (name == "tie") return Verdict::kTie;
  if (name == "loss") return Verdict::kLoss;
  throw Error(ErrorCode::kParseError, "unknown verdict '" + std::string(name) + "'");
}

namespace {

int signed_score(OrderResult r) {
  switch (r) {
    case OrderResult::kAWins: return 1;
    case OrderResult::kBWins: return -1;
    case OrderResult::kTie: return 0;
  }
  return 0;
}

}  // namespace

Verdict aggregate_dual_order(OrderResult order_ab, OrderResult order_ba) {
  const int s = signed_score(order_ab) + signed_score(order_ba);
  if (s > 0) return Verdict::kWin;
  if (s < 0) return Verdict::kLoss;
  return Verdict::kTie;
}

double win_rate(std::int64_t wins, std::int64_t ties, std::int64_t losses) {
  if (wins < 0 || ties < 0 || losses < 0) {
    throw Error(ErrorCode::kOutOfRange, "negative verdict count");
  }
  if (wins + losses == 0) throw Error(ErrorCode::kAllTies, "win rate undefined without decisions");
  return 100.0 * static_cast<double>(wins) / static_cast<double>(wins + losses);
}

EvalSummary summarize(std::span<const Verdict> verdicts, std::span<const double> totals) {
  if (verdicts.size() != totals.size()) {
    throw Error(ErrorCode::kValidationError, "verdict and score lists differ in length");
  }
  EvalSummary out;
  for (Verdict v : verdicts) {
    switch (v) {
      case Verdict::kWin: ++out.wins; break;
      case Verdict::kTie: ++out.ties; break;
      case Verdict::kLoss: ++out.losses; break;
    }
  }
  if (out.wins + out.losses > 0) out.win_rate_pct = win_rate(out.wins, out.ties, out.losses);
  if (!totals.empty()) {
    double sum = 0.0;
    for (double t : totals) sum += t;
    out.mean_total_score = sum / static_cast<double>(totals.size());
  }
  return out;
}

std::string_view judge_rubric_template() { return detail::kJudgeRubric; }
std::string_view judge_rubric_version() { return detail::kJudgeRubricVersion; }

std::string render_judge_prompt(const JudgeRequest& request, bool swap_order) {
  const std::string_view tmpl = judge_rubric_template();
  const std::string& first = swap_order ? request.answer_b : request.answer_a;
  const std::string& second = swap_order ? request.answer_a : request.answer_b;
  // Single left-to-right pass, so substituted text is never rescanned.
  std::string out;
  out.reserve(tmpl.size() + request.question.size() + request.caption.size() +
              request.reference_answer.size() + first.size() + second.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out += tmpl.substr(open);
      break;
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    if (name == "question") {
      out += request.question;
    } else if (name == "caption") {
      out += request.caption;
    } else if (name == "reference") {
      out += request.reference_answer;
    } else if (name == "answer_a") {
      out += first;
    } else if (name == "answer_b") {
      out += second;
    } else {
      out += tmpl.substr(open, close - open + 1);
    }
    pos = close + 1;
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_score_line(const std::string& line, std::string_view key, std::string_view payload) {
  const std::string prefix = std::string(key) + ":";
  if (line.rfind(prefix, 0) != 0) {
    throw MalformedJudgeResponse("expected '" + prefix + "' line, got '" + line + "'",
                                 std::string(payload));
  }
  const std::string value = trim(std::string_view(line).substr(prefix.size()));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (value.empty() || used != value.size() || !(v >= 0.0 && v <= 10.0)) {
    throw MalformedJudgeResponse("bad " + std::string(key) + " score '" + value + "'",
                                 std::string(payload));
  }
  return v;
}

}  // namespace

SlotJudgement parse_judge_response(std::string_view response) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(response)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string line = trim(raw);
    if (!line.empty()) lines.push_back(std::move(line));
  }
  if (lines.size() != 11) {
    throw MalformedJudgeResponse("expected 11 non-empty lines, got " + std::to_string(lines.size()),
                                 std::string(response));
  }
  SlotJudgement out;
  const std::string& verdict_line = lines[0];
  if (verdict_line == "VERDICT: A") {
    out.slot_verdict = OrderResult::kAWins;
  } else if (verdict_line == "VERDICT: B") {
    out.slot_verdict = OrderResult::kBWins;
  } else if (verdict_line == "VERDICT: TIE") {
    out.slot_verdict = OrderResult::kTie;
  } else {
    throw MalformedJudgeResponse("bad verdict line '" + verdict_line + "'", std::string(response));
  }
  auto read_block = [&](std::size_t start, std::string_view header) {
    if (lines[start] != header) {
      throw MalformedJudgeResponse("expected '" + std::string(header) + "'", std::string(response));
    }
    JudgeScores s;
    s.coverage = parse_score_line(lines[start + 1], "COVERAGE", response);
    s.accuracy = parse_score_line(lines[start + 2], "ACCURACY", response);
    s.details = parse_score_line(lines[start + 3], "DETAILS", response);
    s.fluency = parse_score_line(lines[start + 4], "FLUENCY", response);
    return s;
  };
  out.first = read_block(1, "[A]");
  out.second = read_block(6, "[B]");
  return out;
}

std::string format_judge_response(const SlotJudgement& j) {
  std::ostringstream out;
  out << "VERDICT: " << order_result_name(j.slot_verdict) << "\n";
  auto block = [&](std::string_view header, const JudgeScores& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s\nCOVERAGE: %g\nACCURACY: %g\nDETAILS: %g\nFLUENCY: %g\n",
                  std::string(header).c_str(), s.coverage, s.accuracy, s.details, s.fluency);
    out << buf;
  };
  block("[A]", j.first);
  block("[B]", j.second);
  return out.str();
}

AuditLog::AuditLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw Error(ErrorCode::kIoError, "cannot open audit log " + path.string());
}

void AuditLog::record(std::string_view sample_id, std::string_view order, int attempt,
                      std::string_view request, const std::optional<std::string>& response,
                      const std::optional<std::string>& error) {
  nlohmann::json row;
  row["sample_id"] = sample_id;
  row["order"] = order;
  row["attempt"] = attempt;
  row["rubric_version"] = judge_rubric_version();
  row["request"] = request;
  row["response"] = response ? nlohmann::json(*response) : nlohmann::json(nullptr);
  row["error"] = error ? nlohmann::json(*error) : nlohmann::json(nullptr);
  const std::string line = row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

namespace {

OrderResult flip(OrderResult r) {
  switch (r) {
    case OrderResult::kAWins: return OrderResult::kBWins;
    case OrderResult::kBWins: return OrderResult::kAWins;
    case OrderResult::kTie: return OrderResult::kTie;
  }
  return r;
}

JudgeScores mean_scores(const JudgeScores& x, const JudgeScores& y) {
  return {(x.coverage + y.coverage) / 2, (x.accuracy + y.accuracy) / 2,
          (x.details + y.details) / 2, (x.fluency + y.fluency) / 2};
}

// Transport failures are retried; malformed content is not.
std::pair<SlotJudgement, std::string> call_judge(JudgeClient& judge, const std::string& prompt,
                                                 const JudgeOptions& options, AuditLog* audit,
                                                 std::string_view sample_id,
                                                 std::string_view order) {
  const int attempts = 1 + std::max(0, options.max_transport_retries);
  for (int attempt = 1;; ++attempt) {
    std::string response;
    try {
      response = judge.submit(prompt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kJudgeUnavailable) throw;
      if (audit) audit->record(sample_id, order, attempt, prompt, std::nullopt, e.what());
      if (attempt >= attempts) throw;
      continue;
    }
    try {
      SlotJudgement parsed = parse_judge_response(response);
      if (audit) audit->record(sample_id, order, attempt, prompt, response, std::nullopt);
      return {parsed, std::move(response)};
    } catch (const MalformedJudgeResponse& e) {
      if (audit) audit->record(sample_id, order, attempt, prompt, response, e.what());
      throw;
    }
  }
}

}  // namespace

PairJudgement judge_pair(const JudgeRequest& request, JudgeClient& judge,
                         const JudgeOptions& options, AuditLog* audit,
                         std::string_view sample_id) {
  auto [ab, raw_ab] =
      call_judge(judge, render_judge_prompt(request, false), options, audit, sample_id, "AB");
  auto [ba, raw_ba] =
      call_judge(judge, render_judge_prompt(request, true), options, audit, sample_id, "BA");

  PairJudgement out;
  out.verdict.order_ab = ab.slot_verdict;
  // In the BA call the first slot holds candidate B.
  out.verdict.order_ba = flip(ba.slot_verdict);
  out.verdict.aggregate = aggregate_dual_order(out.verdict.order_ab, out.verdict.order_ba);
  if (options.score_policy == ScorePolicy::kMeanOfBoth) {
    out.scores_a = mean_scores(ab.first, ba.second);
    out.scores_b = mean_scores(ab.second, ba.first);
  } else {
    out.scores_a = ab.first;
    out.scores_b = ab.second;
  }
  out.raw_ab = std::move(raw_ab);
  out.raw_ba = std::move(raw_ba);
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// DeterministicMockJudge
// ---------------------------------------------------------------------------

DeterministicMockJudge::DeterministicMockJudge(Rule rule, std::uint64_t seed,
                                               JudgeScores fixed_scores)
    : rule_(rule), seed_(seed), fixed_(fixed_scores) {
  validate_scores(fixed_);
}

namespace {

std::string section(std::string_view prompt, std::string_view open, std::string_view close) {
  const auto start = prompt.find(open);
  if (start == std::string_view::npos) return {};
  const auto body = start + open.size();
  const auto end = prompt.find(close, body);
  return std::string(prompt.substr(body, end == std::string_view::npos ? end : end - body));
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct OverlapQuality {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t length = 0;
};

OverlapQuality overlap(std::string_view answer, std::string_view reference) {
  const auto aw = words(answer);
  const auto rw = words(reference);
  const std::set<std::string> a(aw.begin(), aw.end());
  const std::set<std::string> r(rw.begin(), rw.end());
  std::size_t common = 0;
  for (const auto& w : a) common += r.count(w);
  OverlapQuality q;
  q.length = aw.size();
  if (!a.empty()) q.precision = static_cast<double>(common) / static_cast<double>(a.size());
  if (!r.empty()) q.recall = static_cast<double>(common) / static_cast<double>(r.size());
  if (q.precision + q.recall > 0) q.f1 = 2 * q.precision * q.recall / (q.precision + q.recall);
  return q;
}

// Uniform in [-1, 1], fixed by (seed, text).
double noise(std::uint64_t seed, std::string_view text) {
  return static_cast<double>(fnv1a64(text, seed) % 2001) / 1000.0 - 1.0;
}

}  // namespace

std::string DeterministicMockJudge::submit(const std::string& prompt_text) {
  const std::string first = section(prompt_text, "[Answer A]\n", "\n\n[Answer B]\n");
  const std::string second = section(prompt_text, "[Answer B]\n", "\n\nCompare Answer A");
  SlotJudgement j;
  switch (rule_) {
    case Rule::kMalformed:
      return "I think the first answer is somewhat better overall.";
    case Rule::kAlwaysTie:
      j.slot_verdict = OrderResult::kTie;
      j.first = fixed_;
      j.second = fixed_;
      break;
    case Rule::kPreferLonger: {
      const JudgeScores half{fixed_.coverage / 2, fixed_.accuracy / 2, fixed_.details / 2,
                             fixed_.fluency / 2};
      if (first.size() > second.size()) {
        j = {OrderResult::kAWins, fixed_, half};
      } else if (second.size() > first.size()) {
        j = {OrderResult::kBWins, half, fixed_};
      } else {
        j = {OrderResult::kTie, fixed_, fixed_};
      }
      break;
    }
    case Rule::kOverlap: {
      const std::string reference = section(prompt_text, "[Reference answer]\n", "\n\n[Answer A]\n");
      const OverlapQuality q1 = overlap(first, reference);
      const OverlapQuality q2 = overlap(second, reference);
      // Position-dependent noise: the same pair can be judged differently
      // in the two orders, which is what dual-order judging is meant to
      // cancel.
      const double s1 = q1.f1 + 0.15 * noise(seed_, prompt_text + "#1");
      const double s2 = q2.f1 + 0.15 * noise(seed_, prompt_text + "#2");
      if (std::abs(s1 - s2) < 0.05) {
        j.slot_verdict = OrderResult::kTie;
      } else {
        j.slot_verdict = s1 > s2 ? OrderResult::kAWins : OrderResult::kBWins;
      }
      auto scores = [&](const OverlapQuality& q, std::string_view tag) {
        JudgeScores s;
        s.coverage = std::round(10.0 * q.recall);
        s.accuracy = std::round(10.0 * q.precision);
        s.details = std::min(10.0, std::round(2.0 + static_cast<double>(q.length) / 4.0));
        s.fluency = 8.0 + static_cast<double>(fnv1a64(prompt_text + std::string(tag), seed_) % 3);
        return s;
      };
      j.first = scores(q1, "#f1");
      j.second = scores(q2, "#f2");
      break;
    }
  }
  return format_judge_response(j);
}

}  // namespace gazecrop
