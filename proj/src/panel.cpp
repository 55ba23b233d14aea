#include "clubkit/panel.hpp"

#include <algorithm>
#include <unordered_set>

#include "clubkit/errors.hpp"

namespace clubkit {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SamePair: return "SamePair";
    case Errc::TooFewMembers: return "TooFewMembers";
    case Errc::InvalidPanel: return "InvalidPanel";
    case Errc::InvalidPartition: return "InvalidPartition";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BandwidthTooLarge: return "BandwidthTooLarge";
    case Errc::SingularLrv: return "SingularLrv";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::InfeasibleConfig: return "InfeasibleConfig";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::UndefinedRatio: return "UndefinedRatio";
    case Errc::DegenerateMargins: return "DegenerateMargins";
    case Errc::ParseError: return "ParseError";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::NonPositiveForLog: return "NonPositiveForLog";
    case Errc::UnknownId: return "UnknownId";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Panel::Panel(std::vector<std::string> ids, Eigen::MatrixXd values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (ids_.size() != static_cast<std::size_t>(values_.rows()))
    throw Error(Errc::InvalidPanel, "id count does not match row count");
  if (ids_.empty() || values_.cols() == 0) throw Error(Errc::EmptyInput, "panel has no data");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (id.empty()) throw Error(Errc::InvalidPanel, "empty region id");
    if (!seen.insert(id).second) throw Error(Errc::InvalidPanel, "duplicate region id '" + id + "'");
  }
  if (!values_.allFinite()) throw Error(Errc::InvalidPanel, "panel contains missing or non-finite values");
}

Index Panel::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw Error(Errc::UnknownId, "no region with id '" + id + "'");
  return static_cast<Index>(it - ids_.begin());
}

PairDiff pair_diff(const Panel& panel, Index i, Index j) {
  if (i >= panel.regions() || j >= panel.regions())
    throw Error(Errc::IndexOutOfRange, "pair (" + std::to_string(i) + "," + std::to_string(j) +
                                           ") outside panel of " + std::to_string(panel.regions()));
  if (i == j) throw Error(Errc::SamePair, "pair_diff needs two distinct regions");
  return PairDiff{i, j, (panel.row(i) - panel.row(j)).transpose()};
}

std::vector<PairDiff> all_pair_diffs(const Members& members, const Panel& panel) {
  if (members.size() < 2) throw Error(Errc::TooFewMembers, "need at least two members");
  std::vector<PairDiff> out;
  out.reserve(members.size() * (members.size() - 1) / 2);
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      out.push_back(pair_diff(panel, members[a], members[b]));
  return out;
}

std::vector<PairDiff> consecutive_pair_diffs(const Members& members, const Panel& panel) {
  if (members.size() < 2) throw Error(Errc::TooFewMembers, "need at least two members");
  std::vector<PairDiff> out;
  out.reserve(members.size() - 1);
  for (std::size_t a = 0; a + 1 < members.size(); ++a)
    out.push_back(pair_diff(panel, members[a], members[a + 1]));
  return out;
}

Eigen::MatrixXd stack(std::span<const PairDiff> diffs) {
  if (diffs.empty()) throw Error(Errc::EmptyInput, "no difference series");
  const auto T = diffs.front().series.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(diffs.size()), T);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    if (diffs[k].series.size() != T) throw Error(Errc::DimensionMismatch, "series lengths differ");
    out.row(static_cast<Eigen::Index>(k)) = diffs[k].series.transpose();
  }
  return out;
}

Partition::Partition(std::vector<Members> clubs, Index universe) : clubs_(std::move(clubs)), universe_(universe) {
  std::vector<char> seen(universe_, 0);
  Index covered = 0;
  for (auto& club : clubs_) {
    if (club.empty()) throw Error(Errc::InvalidPartition, "empty club");
    std::sort(club.begin(), club.end());
    for (Index r : club) {
      if (r >= universe_) throw Error(Errc::InvalidPartition, "region index out of range");
      if (seen[r]) throw Error(Errc::InvalidPartition, "region " + std::to_string(r) + " in two clubs");
      seen[r] = 1;
      ++covered;
    }
  }
  if (covered != universe_) throw Error(Errc::InvalidPartition, "clubs do not cover every region");
  std::sort(clubs_.begin(), clubs_.end(), [](const Members& a, const Members& b) { return a.front() < b.front(); });
}

Partition Partition::singletons(Index universe) {
  std::vector<Members> clubs(universe);
  for (Index i = 0; i < universe; ++i) clubs[i] = {i};
  return Partition(std::move(clubs), universe);
}

std::vector<Index> Partition::labels() const {
  std::vector<Index> out(universe_);
  for (Index c = 0; c < clubs_.size(); ++c)
    for (Index r : clubs_[c]) out[r] = c;
  return out;
}

std::vector<Members> Partition::by_size() const {
  auto out = clubs_;
  std::stable_sort(out.begin(), out.end(), [](const Members& a, const Members& b) { return a.size() > b.size(); });
  return out;
}

Members merge(const Members& a, const Members& b) {
  Members out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace clubkit
