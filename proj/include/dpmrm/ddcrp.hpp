#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpmrm/corpus.hpp"
#include "dpmrm/rng.hpp"
#include "dpmrm/sampler.hpp"
#include "dpmrm/state.hpp"

namespace dpmrm {

struct SpatialItem {
  int texture = 0;
  int color = 0;
};

// One image-like group: items carry texture/color codewords, adjacency is an
// undirected edge list, hop distances are shortest-path counts (-1 when
// unreachable).
struct SpatialGroup {
  std::string id;
  std::vector<SpatialItem> items;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> labels;  // sorted unique label ids, non-empty
  std::vector<std::vector<int>> hops;

  int size() const { return static_cast<int>(items.size()); }
  void compute_hops();
};

struct GroupCollection {
  std::vector<SpatialGroup> groups;
  LabelSet labels;
  int codebook_texture = 128;
  int codebook_color = 128;
};

// JSON-lines: a header object {"W_t": int, "W_c": int} followed by one group
// per line {"id", "labels", "items": [{"t","c"}...], "edges": [[i,j]...]}.
GroupCollection load_groups(const std::string& path);
void save_groups(const GroupCollection& data, const std::string& path);

struct DdcrpHypers {
  double alpha = 1.0;
  std::vector<double> gamma;
  double eta = 1.0;
  double beta_texture = 0.5;
  double beta_color = 0.5;
  int window = 2;
  GammaPrior alpha_prior{1.0, 1.0};
  GammaPrior gamma_prior{1.0, 1.0};

  void validate(int num_labels) const;
  static DdcrpHypers defaults(int num_labels);
};

// Window decay: 1 for hop counts in (0, a], else 0.
int decay(int hop, int window);

// Connected components of the undirected link graph {(i, c_i)}; component
// ids are assigned in order of each component's lowest item index.
std::vector<int> components_from_links(const std::vector<int>& links);

// Link prior for item i: weight(i') = decay(d_ii'); weight(i) = alpha.
std::vector<double> link_prior(const SpatialGroup& group, int i, int window,
                               double alpha);

// Sequential urn draw of a full link vector: item i links to an earlier item
// within the window (weight 1 each) or to itself (weight alpha). With the
// window covering the whole group this is exactly the CRP.
std::vector<int> sequential_prior_links(const SpatialGroup& group, int window,
                                        double alpha, Rng& rng);

struct DdcrpDish {
  int label = -1;
  int components = 0;
  std::vector<int> texture_count;
  std::vector<int> color_count;
  long long texture_total = 0;
  long long color_total = 0;
  bool retired = false;
};

// ddCRP-MRM sampler over a set of groups sharing the label-indexed dish
// measures. Components (connected link components) play the table role.
class DdcrpModel {
 public:
  DdcrpModel(const GroupCollection& data, DdcrpHypers hypers);

  const GroupCollection& data() const { return *data_; }
  const DdcrpHypers& hypers() const { return hypers_; }
  DdcrpHypers& hypers() { return hypers_; }
  int num_labels() const { return data_->labels.size(); }

  const std::vector<int>& links(int g) const {
    return links_[static_cast<std::size_t>(g)];
  }
  const std::vector<int>& components(int g) const {
    return comp_of_[static_cast<std::size_t>(g)];
  }
  const std::vector<DishId>& component_dishes(int g) const {
    return comp_dish_[static_cast<std::size_t>(g)];
  }
  const LabelMask& mask(int g) const { return masks_[static_cast<std::size_t>(g)]; }
  const DdcrpDish& dish(int k, int l) const {
    return dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
  }
  int dish_slots(int k) const {
    return static_cast<int>(dishes_[static_cast<std::size_t>(k)].size());
  }
  long long label_components(int k) const {
    return label_components_[static_cast<std::size_t>(k)];
  }
  int live_dish_count(int k) const {
    return static_cast<int>(live_ids_[static_cast<std::size_t>(k)].size());
  }
  const std::vector<int>& live_dish_ids(int k) const {
    return live_ids_[static_cast<std::size_t>(k)];
  }

  // Seats every group's initial (all-self-link) components by sequential
  // draws from the dish conditional.
  void init(Rng& rng);

  void resample_link(int g, int i, Rng& rng);
  // Deterministically rewires c_i (merge inherits the target component's
  // dish, split pieces keep the old dish).
  void set_link(int g, int i, int target);
  void resample_component_dish(int g, int component, Rng& rng);
  // Candidates and log weights of the component's dish conditional, with the
  // component's contribution excluded (restores the state).
  BlockDishDistribution component_dish_distribution(int g, int component);
  // Log link weights for item i aligned with candidate item ids 0..n-1:
  // log prior plus the split/merge marginal likelihood ratio, -inf outside
  // the window. Assumes links_[g][i] currently points to itself.
  std::vector<double> link_log_posterior(int g, int i) const;

  void resample_hypers(Rng& rng);
  void gibbs_sweep(Rng& rng, bool sample_hypers);

  std::vector<std::string> audit() const;

 private:
  BlockDishDistribution dish_distribution_unseated(
      int g, const std::vector<int>& item_ids) const;
  void rebuild_group(int g, int anchor_item, DishId anchor_dish);
  void remove_component_counts(int g, int component);
  void add_component_counts(int g, int component, DishId dish);
  DishId create_dish(int k);
  void maybe_retire(DishId id);
  double log_component_marginal(const std::vector<int>& item_ids, int g) const;
  double log_dish_likelihood(const std::vector<int>& item_ids, int g, int k,
                             int l) const;
  std::vector<std::vector<int>> component_items(int g) const;

  const GroupCollection* data_;
  DdcrpHypers hypers_;
  std::vector<LabelMask> masks_;
  std::vector<std::vector<int>> links_;
  std::vector<std::vector<int>> comp_of_;
  std::vector<std::vector<DishId>> comp_dish_;
  std::vector<std::vector<int>> group_label_comps_;  // m_gk
  std::vector<int> group_comp_total_;                // m_g.
  std::vector<std::vector<DdcrpDish>> dishes_;
  std::vector<long long> label_components_;  // m_.k.
  std::vector<std::vector<int>> live_ids_;
  std::vector<std::vector<double>> prior_sums_;  // f_sum per item per group
};

struct GroupSegmentation {
  std::string group_id;
  std::vector<int> assignment;  // canonical component id per item
  std::vector<std::string> component_labels;
};

struct SegmentSample {
  // [group][item] -> component, [group][component] -> label id
  std::vector<std::vector<int>> assignment;
  std::vector<std::vector<int>> component_label;
};

struct SegmentResult {
  std::vector<GroupSegmentation> final_sample;
  std::vector<SegmentSample> samples;  // post burn-in at sample_gap
};

SegmentResult segment(const GroupCollection& data, const DdcrpHypers& hypers,
                      const ChainConfig& config);

void save_segmentation(const SegmentResult& result, const std::string& path);

}  // namespace dpmrm
