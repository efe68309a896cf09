#include "dpp/core.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace dpp {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

ProblemSpec::ProblemSpec(std::vector<EventOutcome> events, int num_constraints, double z_max,
                         double B, double V, TieBreak tie_break)
    : events_(std::move(events)),
      num_constraints_(num_constraints),
      z_max_(z_max),
      B_(B),
      V_(V),
      tie_break_(tie_break) {
  if (num_constraints_ < 1) throw InvalidInput("ProblemSpec: L must be a positive integer");
  if (!(z_max_ > 0.0)) throw InvalidInput("ProblemSpec: z_max must be > 0");
  if (!(B_ > 0.0)) throw InvalidInput("ProblemSpec: B must be > 0");
  if (!(V_ > 0.0)) throw InvalidInput("ProblemSpec: V must be > 0");
  if (events_.empty()) throw InvalidInput("ProblemSpec: event support is empty");

  CompensatedSum total;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const EventOutcome& e = events_[i];
    const std::string where = "ProblemSpec: event " + std::to_string(i);
    if (e.id != i) throw InvalidInput(where + " has id " + std::to_string(e.id));
    if (!(e.probability > 0.0 && e.probability <= 1.0)) {
      throw InvalidInput(where + " probability must lie in (0,1]");
    }
    if (e.actions.empty()) throw InvalidInput(where + " has no actions");
    for (std::size_t a = 0; a < e.actions.size(); ++a) {
      const ActionVector& act = e.actions[a];
      const std::string what = where + " action " + std::to_string(a);
      if (act.z.size() != num_constraints_) {
        throw InvalidInput(what + " has dimension " + std::to_string(act.z.size() + 1) +
                           ", expected " + std::to_string(num_constraints_ + 1));
      }
      if (!std::isfinite(act.z0) || !act.z.allFinite()) throw InvalidInput(what + " is not finite");
      if (std::abs(act.z0) > z_max_) throw InvalidInput(what + " violates |z0| <= z_max");
      if (act.z.norm() > B_) throw InvalidInput(what + " violates ||z|| <= B");
    }
    total += e.probability;
  }
  if (std::abs(total.value() - 1.0) > kProbabilityTolerance) {
    throw InvalidInput("ProblemSpec: probabilities sum to " + format_double(total.value()));
  }
}

const EventOutcome& ProblemSpec::event(std::size_t id) const {
  if (id >= events_.size()) throw InvalidInput("unknown event id " + std::to_string(id));
  return events_[id];
}

ProblemSpec ProblemSpec::with_V(double V) const {
  return ProblemSpec(events_, num_constraints_, z_max_, B_, V, tie_break_);
}

std::uint64_t ProblemSpec::digest() const {
  Fnv1a h;
  h.u64(static_cast<std::uint64_t>(num_constraints_));
  h.f64(z_max_);
  h.f64(B_);
  h.f64(V_);
  h.u64(static_cast<std::uint64_t>(tie_break_));
  h.u64(events_.size());
  for (const EventOutcome& e : events_) {
    h.f64(e.probability);
    h.u64(e.actions.size());
    for (const ActionVector& a : e.actions) {
      h.f64(a.z0);
      for (Eigen::Index l = 0; l < a.z.size(); ++l) h.f64(a.z[l]);
    }
  }
  return h.value();
}

bool drift_upper_bound_check(const SlotRecord& record, double B) {
  const double bound = 0.5 * B * B + record.q_before.dot(record.action.z);
  return record.drift <= bound + kLawTolerance;
}

PathTrace::PathTrace(std::uint64_t spec_digest, std::uint64_t seed, int L, std::size_t T)
    : spec_digest_(spec_digest),
      seed_(seed),
      event_ids_(T),
      action_indices_(T),
      objective_(Vector::Zero(static_cast<Eigen::Index>(T))),
      constraints_(Matrix::Zero(L, static_cast<Eigen::Index>(T))),
      queues_(Matrix::Zero(L, static_cast<Eigen::Index>(T) + 1)),
      drifts_(Vector::Zero(static_cast<Eigen::Index>(T))) {}

void PathTrace::set_slot(std::size_t i, std::size_t event_id, std::size_t action_index,
                         const ActionVector& a) {
  const auto col = static_cast<Eigen::Index>(i);
  event_ids_[i] = static_cast<std::uint32_t>(event_id);
  action_indices_[i] = static_cast<std::uint32_t>(action_index);
  objective_[col] = a.z0;
  constraints_.col(col) = a.z;
  drifts_[col] = drift(queues_.col(col), queues_.col(col + 1));
}

SlotRecord PathTrace::record(std::size_t i) const {
  if (i >= size()) throw InvalidInput("PathTrace::record: slot out of range");
  const auto col = static_cast<Eigen::Index>(i);
  SlotRecord r;
  r.t = i + 1;
  r.event_id = event_ids_[i];
  r.action_index = action_indices_[i];
  r.action.z0 = objective_[col];
  r.action.z = constraints_.col(col);
  r.q_before = queues_.col(col);
  r.q_after = queues_.col(col + 1);
  r.drift = drifts_[col];
  return r;
}

double time_average(const PathTrace& trace, Statistic which) {
  if (trace.empty()) throw InvalidInput("time_average: empty trace");
  const auto T = static_cast<Eigen::Index>(trace.size());
  CompensatedSum sum;
  switch (which.kind) {
    case Statistic::Kind::Objective:
      for (Eigen::Index i = 0; i < T; ++i) sum += trace.objective()[i];
      break;
    case Statistic::Kind::Constraint: {
      if (which.l < 1 || which.l > trace.L()) {
        throw InvalidInput("time_average: constraint index out of range");
      }
      const auto row = trace.constraints().row(which.l - 1);
      for (Eigen::Index i = 0; i < T; ++i) sum += row[i];
      break;
    }
    case Statistic::Kind::QueueSum:
      for (Eigen::Index i = 0; i < T; ++i) sum += trace.queues().col(i).sum();
      break;
  }
  return sum.value() / static_cast<double>(T);
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void write_trace_csv(std::ostream& out, const PathTrace& trace) {
  const int L = trace.L();
  out << "t,event_id,action_index,z0";
  for (int l = 1; l <= L; ++l) out << ",z_" << l;
  for (int l = 1; l <= L; ++l) out << ",q_" << l;
  out << ",drift\n";
  std::string line;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    line.clear();
    line += std::to_string(i + 1);
    line += ',';
    line += std::to_string(trace.event_ids()[i]);
    line += ',';
    line += std::to_string(trace.action_indices()[i]);
    line += ',';
    line += format_double(trace.objective()[col]);
    for (int l = 0; l < L; ++l) {
      line += ',';
      line += format_double(trace.constraints()(l, col));
    }
    for (int l = 0; l < L; ++l) {
      line += ',';
      line += format_double(trace.queues()(l, col + 1));
    }
    line += ',';
    line += format_double(trace.drifts()[col]);
    line += '\n';
    out << line;
  }
}

namespace {

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InvalidInput("trace CSV line " + std::to_string(line_no) + ": bad number '" +
                       std::string(s) + "'");
  }
  return v;
}

}  // namespace

PathTrace read_trace_csv(std::istream& in, int L) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidInput("trace CSV: missing header");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != static_cast<std::size_t>(2 * L + 5)) {
      throw InvalidInput("trace CSV line " + std::to_string(rows.size() + 2) +
                         ": wrong field count");
    }
    rows.push_back(std::move(fields));
  }
  PathTrace trace(0, 0, L, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t line_no = i + 2;
    ActionVector a;
    a.z0 = parse_double(r[3], line_no);
    a.z.resize(L);
    for (int l = 0; l < L; ++l) a.z[l] = parse_double(r[4 + l], line_no);
    for (int l = 0; l < L; ++l) {
      trace.queues()(l, static_cast<Eigen::Index>(i) + 1) = parse_double(r[4 + L + l], line_no);
    }
    trace.set_slot(i, std::stoul(r[1]), std::stoul(r[2]), a);
  }
  return trace;
}

}  // namespace dpp
