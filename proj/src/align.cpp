#include "detmask/align.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "detmask/edit_distance.hpp"
#include "detmask/error.hpp"

namespace detmask {

Aligner::Aligner(const KnowledgeBase& kb) : kb_(kb) {
  // Ids iterate in ascending order, so an alias shared by several entities
  // resolves to the smallest id.
  for (const auto& [id, aliases] : kb.entity_aliases()) {
    const auto index = *kb.entity_index(id);
    for (const auto& alias : aliases) {
      const auto lowered = to_lower(trim(alias));
      if (lowered.empty()) continue;
      entity_dictionary_.emplace(lowered, index);
      max_alias_tokens_ = std::max(max_alias_tokens_, split_tokens(lowered).size());
    }
  }
  predicate_aliases_.resize(kb.predicate_count());
  for (const auto& [id, aliases] : kb.predicate_aliases()) {
    auto& out = predicate_aliases_[*kb.predicate_index(id)];
    for (const auto& alias : aliases) {
      auto lowered = to_lower(trim(alias));
      if (!lowered.empty()) out.push_back(std::move(lowered));
    }
  }
}

std::vector<LinkedSpan> Aligner::link_entities(const Paragraph& paragraph) const {
  if (paragraph.pre_linked) return *paragraph.pre_linked;

  const auto lowered = to_lower(paragraph.text);
  const auto tokens = split_tokens(lowered);
  std::vector<LinkedSpan> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(max_alias_tokens_, tokens.size() - i);
    std::size_t taken = 0;
    for (std::size_t k = longest; k >= 1; --k) {
      const Span span{tokens[i].span.begin, tokens[i + k - 1].span.end};
      const auto it = entity_dictionary_.find(
          lowered.substr(span.begin, span.size()));
      if (it != entity_dictionary_.end()) {
        out.push_back({span, kb_.entity_id(it->second)});
        taken = k;
        break;
      }
    }
    i += taken ? taken : 1;
  }
  return out;
}

std::vector<PredicateMatch> Aligner::predicate_windows(
    std::string_view lowered_text, std::span<const TextToken> tokens,
    PredicateIndex p) const {
  std::vector<PredicateMatch> found;
  for (const auto& alias : predicate_aliases_[p]) {
    const std::size_t min_len = alias.size() > 1 ? alias.size() - 1 : 1;
    const std::size_t max_len = alias.size() + 1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::size_t begin = tokens[i].span.begin;
      for (std::size_t j = i; j < tokens.size(); ++j) {
        const std::size_t len = tokens[j].span.end - begin;
        if (len > max_len) break;
        if (len < min_len) continue;
        const auto d = bounded_levenshtein(lowered_text.substr(begin, len), alias, 1);
        if (d <= 1) found.push_back({{begin, begin + len}, d});
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::tuple(a.distance, a.span.begin, a.span.size()) <
           std::tuple(b.distance, b.span.begin, b.span.size());
  });
  // The same window may match several aliases; keep its smallest distance.
  std::vector<PredicateMatch> unique;
  for (const auto& m : found) {
    if (std::none_of(unique.begin(), unique.end(),
                     [&](const auto& u) { return u.span == m.span; }))
      unique.push_back(m);
  }
  return unique;
}

std::optional<PredicateMatch> Aligner::match_predicate(std::string_view text,
                                                       const PredicateId& p) const {
  const auto index = kb_.predicate_index(p);
  if (!index) return std::nullopt;
  const auto lowered = to_lower(text);
  const auto tokens = split_tokens(lowered);
  auto windows = predicate_windows(lowered, tokens, *index);
  if (windows.empty()) return std::nullopt;
  return windows.front();
}

ParagraphAlignment Aligner::align(const Paragraph& paragraph) const {
  ParagraphAlignment result;
  auto& sample = result.sample;
  sample.paragraph = paragraph;
  sample.entity_spans = link_entities(paragraph);
  const auto& spans = sample.entity_spans;

  std::vector<std::optional<EntityIndex>> resolved;
  resolved.reserve(spans.size());
  for (const auto& ls : spans) resolved.push_back(kb_.entity_index(ls.entity));

  // (s, p, o) -> ordered list of (subject span, object span) occurrences.
  using Key = std::tuple<EntityIndex, PredicateIndex, EntityIndex>;
  std::map<Key, std::vector<std::pair<std::size_t, std::size_t>>> candidates;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!resolved[i]) continue;
    for (std::size_t j = 0; j < spans.size(); ++j) {
      if (i == j || !resolved[j] || spans[i].span == spans[j].span) continue;
      for (auto r : kb_.predicates_between(*resolved[i], *resolved[j]))
        candidates[{*resolved[i], r, *resolved[j]}].emplace_back(i, j);
    }
  }
  if (candidates.empty()) return result;

  const auto lowered = to_lower(paragraph.text);
  const auto tokens = split_tokens(lowered);
  std::unordered_map<PredicateIndex, std::vector<PredicateMatch>> window_cache;

  for (const auto& [key, occurrences] : candidates) {
    const auto [s, r, o] = key;
    ++result.counters.candidates;
    if (kb_.object_count(s, r) != 1) {
      ++result.counters.nondeterministic;
      continue;
    }
    auto cached = window_cache.find(r);
    if (cached == window_cache.end())
      cached = window_cache.emplace(r, predicate_windows(lowered, tokens, r)).first;
    const auto& windows = cached->second;

    const PredicateMatch* best = nullptr;
    std::pair<std::size_t, std::size_t> best_occurrence;
    for (const auto& occ : occurrences) {
      const auto& subject = spans[occ.first].span;
      const auto& object = spans[occ.second].span;
      for (const auto& w : windows) {
        if (w.span.overlaps(subject) || w.span.overlaps(object)) continue;
        if (!best || std::tuple(w.distance, w.span.begin, w.span.size()) <
                         std::tuple(best->distance, best->span.begin,
                                    best->span.size())) {
          best = &w;
          best_occurrence = occ;
        }
        break;
      }
    }
    if (!best) {
      ++result.counters.unmatched_predicate;
      continue;
    }
    sample.aligned.push_back({{kb_.entity_id(s), kb_.predicate_id(r), kb_.entity_id(o)},
                              spans[best_occurrence.first].span,
                              best->span,
                              spans[best_occurrence.second].span,
                              true,
                              best->distance});
  }

  std::sort(sample.aligned.begin(), sample.aligned.end(),
            [](const AlignedTriplet& a, const AlignedTriplet& b) {
              return std::tie(a.object_span, a.subject_span, a.predicate_span,
                              a.triplet.predicate) <
                     std::tie(b.object_span, b.subject_span, b.predicate_span,
                              b.triplet.predicate);
            });
  return result;
}

std::vector<LinkedSpan> link_entities(const Paragraph& paragraph,
                                      const KnowledgeBase& kb) {
  return Aligner(kb).link_entities(paragraph);
}

std::optional<PredicateMatch> match_predicate(std::string_view text,
                                              const PredicateId& p,
                                              const KnowledgeBase& kb) {
  return Aligner(kb).match_predicate(text, p);
}

ParagraphAlignment align_paragraph(const Paragraph& paragraph,
                                   const KnowledgeBase& kb) {
  return Aligner(kb).align(paragraph);
}

std::vector<ObjectGroup> object_groups(const AlignedSample& sample) {
  std::vector<ObjectGroup> groups;
  for (std::size_t i = 0; i < sample.aligned.size(); ++i) {
    const auto& span = sample.aligned[i].object_span;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const ObjectGroup& g) { return g.object == span; });
    if (it == groups.end()) {
      groups.push_back({span, {i}});
    } else {
      it->triplets.push_back(i);
    }
  }
  return groups;
}

DatasetCounters& DatasetCounters::operator+=(const DatasetCounters& o) {
  paragraphs += o.paragraphs;
  bad_paragraphs += o.bad_paragraphs;
  deterministic_paragraphs += o.deterministic_paragraphs;
  ssm_paragraphs += o.ssm_paragraphs;
  emitted_triplets += o.emitted_triplets;
  triplets += o.triplets;
  return *this;
}

Dataset build_dataset(std::span<const Paragraph> corpus, const Aligner& aligner,
                      int threads) {
  std::vector<ParagraphAlignment> results(corpus.size());
  const auto n = static_cast<long>(corpus.size());
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) results[i] = aligner.align(corpus[i]);
  } else {
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (long i = 0; i < n; ++i) results[i] = aligner.align(corpus[i]);
  }

  Dataset out;
  for (auto& r : results) {
    ++out.counters.paragraphs;
    out.counters.triplets += r.counters;
    if (!r.sample.entity_spans.empty()) {
      ++out.counters.ssm_paragraphs;
      out.salient.push_back({r.sample.paragraph, r.sample.entity_spans});
    }
    if (!r.sample.aligned.empty()) {
      ++out.counters.deterministic_paragraphs;
      out.counters.emitted_triplets += r.sample.aligned.size();
      out.deterministic.push_back(std::move(r.sample));
    }
  }
  return out;
}

DatasetStats compute_stats(std::span<const AlignedSample> deterministic,
                           const AlignCounters& counters) {
  if (deterministic.empty()) throw EmptyDataset();
  DatasetStats stats;
  std::size_t tokens_total = 0;
  std::size_t clue_total = 0;
  std::size_t object_total = 0;
  for (const auto& sample : deterministic) {
    const auto tokens = split_tokens(sample.paragraph.text);
    tokens_total += tokens.size();
    ++stats.paragraph_count;
    for (const auto& group : object_groups(sample)) {
      ++stats.sample_count;
      for (const auto& tok : tokens) {
        if (group.object.contains(tok.span)) {
          ++object_total;
          continue;
        }
        const bool clue = std::any_of(
            group.triplets.begin(), group.triplets.end(), [&](std::size_t t) {
              const auto& a = sample.aligned[t];
              return a.subject_span.contains(tok.span) ||
                     a.predicate_span.contains(tok.span);
            });
        clue_total += clue;
      }
    }
  }
  stats.avg_tokens_per_paragraph =
      static_cast<double>(tokens_total) / static_cast<double>(stats.paragraph_count);
  stats.avg_clue_tokens =
      static_cast<double>(clue_total) / static_cast<double>(stats.sample_count);
  stats.avg_object_tokens =
      static_cast<double>(object_total) / static_cast<double>(stats.sample_count);
  stats.nondeterministic_fraction =
      counters.candidates == 0
          ? 0.0
          : static_cast<double>(counters.nondeterministic) /
                static_cast<double>(counters.candidates);
  return stats;
}

}  // namespace detmask
