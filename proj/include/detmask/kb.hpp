#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace detmask {

using EntityId = std::string;
using PredicateId = std::string;

struct Triplet {
  EntityId subject;
  PredicateId predicate;
  EntityId object;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

// id -> ordered surface strings. For entities the canonical name is first.
using AliasTable = std::map<std::string, std::vector<std::string>>;

// Dense index handed out by the knowledge base for hot-path lookups.
using EntityIndex = std::uint32_t;
using PredicateIndex = std::uint32_t;

// In-memory triplet store with a (subject, predicate) -> objects index and a
// (subject, object) -> predicates index. Immutable once built; concurrent
// reads need no synchronisation.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Validates references and deduplicates triplets.
  static KnowledgeBase from_parts(std::vector<Triplet> triplets,
                                  AliasTable entity_aliases,
                                  AliasTable predicate_aliases);

  // Parses the three tab-separated sources.
  static KnowledgeBase load(std::istream& triplets, std::istream& entities,
                            std::istream& predicates);
  // Reads triplets.tsv, entities.tsv and predicates.tsv from a directory.
  static KnowledgeBase load_dir(const std::filesystem::path& dir);
  void write_dir(const std::filesystem::path& dir) const;

  // Sorted, duplicate-free.
  const std::vector<Triplet>& triplets() const { return triplets_; }
  const AliasTable& entity_aliases() const { return entity_aliases_; }
  const AliasTable& predicate_aliases() const { return predicate_aliases_; }

  // Exact set {o : (s, p, o) in triplets}, sorted; empty for unknown pairs.
  std::vector<EntityId> objects_for(const EntityId& s,
                                    const PredicateId& p) const;
  // True iff exactly one object exists. Zero objects is not deterministic.
  bool is_deterministic(const EntityId& s, const PredicateId& p) const;
  bool contains(const Triplet& t) const;

  std::optional<EntityIndex> entity_index(const EntityId& id) const;
  std::optional<PredicateIndex> predicate_index(const PredicateId& id) const;
  const EntityId& entity_id(EntityIndex e) const { return entity_names_[e]; }
  const PredicateId& predicate_id(PredicateIndex p) const {
    return predicate_names_[p];
  }
  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t predicate_count() const { return predicate_names_.size(); }

  std::size_t object_count(EntityIndex s, PredicateIndex p) const;
  // Predicates r with (s, r, o) in triplets, ascending by index (which
  // matches ascending id order).
  std::span<const PredicateIndex> predicates_between(EntityIndex s,
                                                     EntityIndex o) const;

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  void build_indexes();

  std::vector<Triplet> triplets_;
  AliasTable entity_aliases_;
  AliasTable predicate_aliases_;

  std::vector<EntityId> entity_names_;
  std::vector<PredicateId> predicate_names_;
  std::unordered_map<std::string, EntityIndex> entity_lookup_;
  std::unordered_map<std::string, PredicateIndex> predicate_lookup_;
  std::unordered_map<std::uint64_t, std::vector<EntityIndex>> sp_index_;
  std::unordered_map<std::uint64_t, std::vector<PredicateIndex>> so_index_;
};

}  // namespace detmask
