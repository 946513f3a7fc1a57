#include "dpmrm/ddcrp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpmrm/common.hpp"

namespace dpmrm {

using nlohmann::json;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void SpatialGroup::compute_hops() {
  const int n = size();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw DataError("group " + id + ": edge endpoint out of range");
    }
    if (a == b) continue;
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  hops.assign(static_cast<std::size_t>(n), std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    auto& dist = hops[static_cast<std::size_t>(s)];
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<int> frontier{s};
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] == -1) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          frontier.push_back(v);
        }
      }
    }
  }
}

GroupCollection load_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open group file: " + path);
  GroupCollection data;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("group file line " + std::to_string(line_no) +
                      ": invalid JSON (" + std::string(e.what()) + ")");
    }
    if (!header_seen) {
      if (!j.contains("W_t") || !j.contains("W_c")) {
        throw DataError("group file line 1: expected header {\"W_t\",\"W_c\"}");
      }
      data.codebook_texture = j["W_t"].get<int>();
      data.codebook_color = j["W_c"].get<int>();
      if (data.codebook_texture < 1 || data.codebook_color < 1) {
        throw DataError("group file: codebook sizes must be positive");
      }
      header_seen = true;
      continue;
    }
    SpatialGroup g;
    g.id = j.at("id").get<std::string>();
    std::set<int> label_ids;
    for (const auto& l : j.at("labels")) {
      label_ids.insert(data.labels.add(l.get<std::string>()));
    }
    if (label_ids.empty()) {
      throw DataError("group file line " + std::to_string(line_no) +
                      ": group has no labels");
    }
    g.labels.assign(label_ids.begin(), label_ids.end());
    for (const auto& item : j.at("items")) {
      SpatialItem it;
      it.texture = item.at("t").get<int>();
      it.color = item.at("c").get<int>();
      if (it.texture < 0 || it.texture >= data.codebook_texture ||
          it.color < 0 || it.color >= data.codebook_color) {
        throw DataError("group file line " + std::to_string(line_no) +
                        ": codeword out of range");
      }
      g.items.push_back(it);
    }
    if (g.items.empty()) {
      throw DataError("group file line " + std::to_string(line_no) +
                      ": group has no items");
    }
    for (const auto& e : j.at("edges")) {
      g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    g.compute_hops();
    data.groups.push_back(std::move(g));
  }
  if (!header_seen || data.groups.empty()) {
    throw DataError("group file has no groups: " + path);
  }
  return data;
}

void save_groups(const GroupCollection& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write group file: " + path);
  json header;
  header["W_t"] = data.codebook_texture;
  header["W_c"] = data.codebook_color;
  out << header.dump() << "\n";
  for (const auto& g : data.groups) {
    json j;
    j["id"] = g.id;
    json labels = json::array();
    for (int k : g.labels) labels.push_back(data.labels.id_to_label[k]);
    j["labels"] = std::move(labels);
    json items = json::array();
    for (const auto& it : g.items) items.push_back({{"t", it.texture}, {"c", it.color}});
    j["items"] = std::move(items);
    json edges = json::array();
    for (auto [a, b] : g.edges) edges.push_back({a, b});
    j["edges"] = std::move(edges);
    out << j.dump() << "\n";
  }
}

void DdcrpHypers::validate(int num_labels) const {
  if (!(alpha > 0.0)) throw ConfigError("ddcrp alpha must be positive");
  if (!(eta > 0.0)) throw ConfigError("ddcrp eta must be positive");
  if (!(beta_texture > 0.0) || !(beta_color > 0.0)) {
    throw ConfigError("ddcrp channel betas must be positive");
  }
  if (window < 1) throw ConfigError("ddcrp window must be >= 1");
  if (static_cast<int>(gamma.size()) != num_labels) {
    throw ConfigError("ddcrp gamma must have one entry per label");
  }
  for (double g : gamma) {
    if (!(g > 0.0)) throw ConfigError("ddcrp gamma entries must be positive");
  }
}

DdcrpHypers DdcrpHypers::defaults(int num_labels) {
  DdcrpHypers h;
  h.gamma.assign(static_cast<std::size_t>(num_labels), 1.0);
  return h;
}

int decay(int hop, int window) {
  if (window < 1) throw ConfigError("decay window must be >= 1");
  return (hop > 0 && hop <= window) ? 1 : 0;
}

std::vector<int> components_from_links(const std::vector<int>& links) {
  const int n = static_cast<int>(links.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = links[static_cast<std::size_t>(i)];
    if (c < 0 || c >= n) throw DataError("link target out of range");
    if (c != i) {
      adj[static_cast<std::size_t>(i)].push_back(c);
      adj[static_cast<std::size_t>(c)].push_back(i);
    }
  }
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] != -1) continue;
    const int id = next++;
    std::deque<int> frontier{s};
    comp[static_cast<std::size_t>(s)] = id;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (comp[static_cast<std::size_t>(v)] == -1) {
          comp[static_cast<std::size_t>(v)] = id;
          frontier.push_back(v);
        }
      }
    }
  }
  return comp;
}

std::vector<double> link_prior(const SpatialGroup& group, int i, int window,
                               double alpha) {
  const int n = group.size();
  if (i < 0 || i >= n) throw DataError("link_prior: item out of range");
  std::vector<double> weights(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    weights[static_cast<std::size_t>(j)] =
        decay(group.hops[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
              window);
  }
  weights[static_cast<std::size_t>(i)] = alpha;
  return weights;
}

std::vector<int> sequential_prior_links(const SpatialGroup& group, int window,
                                        double alpha, Rng& rng) {
  const int n = group.size();
  std::vector<int> links(static_cast<std::size_t>(n));
  std::vector<double> weights;
  for (int i = 0; i < n; ++i) {
    weights.assign(static_cast<std::size_t>(i) + 1, 0.0);
    double total = 0.0;
    for (int j = 0; j < i; ++j) {
      const int d =
          group.hops[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      weights[static_cast<std::size_t>(j)] = decay(d, window);
      total += weights[static_cast<std::size_t>(j)];
    }
    weights[static_cast<std::size_t>(i)] = alpha;
    total += alpha;
    links[static_cast<std::size_t>(i)] = rng.categorical(weights, total);
  }
  return links;
}

DdcrpModel::DdcrpModel(const GroupCollection& data, DdcrpHypers hypers)
    : data_(&data), hypers_(std::move(hypers)) {
  const int K = data.labels.size();
  hypers_.validate(K);
  const std::size_t G = data.groups.size();
  masks_.reserve(G);
  links_.resize(G);
  comp_of_.resize(G);
  comp_dish_.resize(G);
  group_label_comps_.resize(G);
  group_comp_total_.assign(G, 0);
  prior_sums_.resize(G);
  dishes_.resize(static_cast<std::size_t>(K));
  label_components_.assign(static_cast<std::size_t>(K), 0);
  live_ids_.resize(static_cast<std::size_t>(K));

  for (std::size_t g = 0; g < G; ++g) {
    const SpatialGroup& grp = data.groups[g];
    if (grp.hops.empty()) {
      throw DataError("group " + grp.id + ": hop distances not computed");
    }
    Document label_carrier;
    label_carrier.doc_id = grp.id;
    label_carrier.labels = grp.labels;
    masks_.push_back(make_label_mask(label_carrier, K, MaskMode::training));
    const int n = grp.size();
    links_[g].assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) links_[g][static_cast<std::size_t>(i)] = i;
    comp_of_[g] = components_from_links(links_[g]);
    comp_dish_[g].assign(static_cast<std::size_t>(n), DishId{});
    group_label_comps_[g].assign(static_cast<std::size_t>(K), 0);
    prior_sums_[g].assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        prior_sums_[g][static_cast<std::size_t>(i)] += decay(
            grp.hops[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
            hypers_.window);
      }
    }
  }
}

DishId DdcrpModel::create_dish(int k) {
  auto& shelf = dishes_[static_cast<std::size_t>(k)];
  DdcrpDish d;
  d.label = k;
  d.texture_count.assign(static_cast<std::size_t>(data_->codebook_texture), 0);
  d.color_count.assign(static_cast<std::size_t>(data_->codebook_color), 0);
  shelf.push_back(std::move(d));
  const int index = static_cast<int>(shelf.size()) - 1;
  live_ids_[static_cast<std::size_t>(k)].push_back(index);
  return DishId{k, index};
}

void DdcrpModel::maybe_retire(DishId id) {
  if (id.index < 0) return;
  DdcrpDish& d = dishes_[static_cast<std::size_t>(id.label)]
                        [static_cast<std::size_t>(id.index)];
  if (!d.retired && d.components == 0) {
    if (d.texture_total != 0 || d.color_total != 0) {
      throw InvariantError("ddcrp dish retiring with nonzero counts");
    }
    d.retired = true;
    d.texture_count.clear();
    d.texture_count.shrink_to_fit();
    d.color_count.clear();
    d.color_count.shrink_to_fit();
    auto& ids = live_ids_[static_cast<std::size_t>(id.label)];
    ids.erase(std::find(ids.begin(), ids.end(), id.index));
  }
}

std::vector<std::vector<int>> DdcrpModel::component_items(int g) const {
  const auto& comp = comp_of_[static_cast<std::size_t>(g)];
  int count = 0;
  for (int c : comp) count = std::max(count, c + 1);
  std::vector<std::vector<int>> items(static_cast<std::size_t>(count));
  for (int i = 0; i < static_cast<int>(comp.size()); ++i) {
    items[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])].push_back(i);
  }
  return items;
}

void DdcrpModel::remove_component_counts(int g, int component) {
  const DishId id = comp_dish_[static_cast<std::size_t>(g)]
                              [static_cast<std::size_t>(component)];
  if (id.index < 0) throw InvariantError("ddcrp: component has no dish");
  DdcrpDish& d = dishes_[static_cast<std::size_t>(id.label)]
                        [static_cast<std::size_t>(id.index)];
  const SpatialGroup& grp = data_->groups[static_cast<std::size_t>(g)];
  for (int i = 0; i < grp.size(); ++i) {
    if (comp_of_[static_cast<std::size_t>(g)][static_cast<std::size_t>(i)] !=
        component) {
      continue;
    }
    const SpatialItem& it = grp.items[static_cast<std::size_t>(i)];
    --d.texture_count[static_cast<std::size_t>(it.texture)];
    --d.color_count[static_cast<std::size_t>(it.color)];
    --d.texture_total;
    --d.color_total;
  }
  --d.components;
  --label_components_[static_cast<std::size_t>(id.label)];
  --group_label_comps_[static_cast<std::size_t>(g)][static_cast<std::size_t>(id.label)];
  --group_comp_total_[static_cast<std::size_t>(g)];
  comp_dish_[static_cast<std::size_t>(g)][static_cast<std::size_t>(component)] =
      DishId{};
}

void DdcrpModel::add_component_counts(int g, int component, DishId dish) {
  if (dish.index == -1) dish = create_dish(dish.label);
  DdcrpDish& d = dishes_[static_cast<std::size_t>(dish.label)]
                        [static_cast<std::size_t>(dish.index)];
  if (d.retired) throw InvariantError("ddcrp: attaching to retired dish");
  if (!masks_[static_cast<std::size_t>(g)].allowed(dish.label)) {
    throw InvariantError("ddcrp: label is masked for this group");
  }
  const SpatialGroup& grp = data_->groups[static_cast<std::size_t>(g)];
  for (int i = 0; i < grp.size(); ++i) {
    if (comp_of_[static_cast<std::size_t>(g)][static_cast<std::size_t>(i)] !=
        component) {
      continue;
    }
    const SpatialItem& it = grp.items[static_cast<std::size_t>(i)];
    ++d.texture_count[static_cast<std::size_t>(it.texture)];
    ++d.color_count[static_cast<std::size_t>(it.color)];
    ++d.texture_total;
    ++d.color_total;
  }
  ++d.components;
  ++label_components_[static_cast<std::size_t>(dish.label)];
  ++group_label_comps_[static_cast<std::size_t>(g)][static_cast<std::size_t>(dish.label)];
  ++group_comp_total_[static_cast<std::size_t>(g)];
  comp_dish_[static_cast<std::size_t>(g)][static_cast<std::size_t>(component)] = dish;
}

double DdcrpModel::log_dish_likelihood(const std::vector<int>& item_ids, int g,
                                       int k, int l) const {
  const SpatialGroup& grp = data_->groups[static_cast<std::size_t>(g)];
  std::map<int, int> tex, col;
  for (int i : item_ids) {
    ++tex[grp.items[static_cast<std::size_t>(i)].texture];
    ++col[grp.items[static_cast<std::size_t>(i)].color];
  }
  const DdcrpDish* dish = nullptr;
  if (l >= 0) {
    dish = &dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
    if (dish->retired) throw InvariantError("ddcrp likelihood on retired dish");
  }
  const int count = static_cast<int>(item_ids.size());
  double lp = 0.0;
  {
    const double beta = hypers_.beta_texture;
    const double wbeta = data_->codebook_texture * beta;
    const long long total = dish ? dish->texture_total : 0;
    for (auto [w, c] : tex) {
      const double base =
          (dish ? dish->texture_count[static_cast<std::size_t>(w)] : 0) + beta;
      lp += std::lgamma(base + c) - std::lgamma(base);
    }
    lp -= std::lgamma(total + wbeta + count) - std::lgamma(total + wbeta);
  }
  {
    const double beta = hypers_.beta_color;
    const double wbeta = data_->codebook_color * beta;
    const long long total = dish ? dish->color_total : 0;
    for (auto [w, c] : col) {
      const double base =
          (dish ? dish->color_count[static_cast<std::size_t>(w)] : 0) + beta;
      lp += std::lgamma(base + c) - std::lgamma(base);
    }
    lp -= std::lgamma(total + wbeta + count) - std::lgamma(total + wbeta);
  }
  return lp;
}

double DdcrpModel::log_component_marginal(const std::vector<int>& item_ids,
                                          int g) const {
  return log_dish_likelihood(item_ids, g, 0, -1);
}

void DdcrpModel::rebuild_group(int g, int anchor_item, DishId anchor_dish) {
  const auto old_comp = comp_of_[static_cast<std::size_t>(g)];
  const auto old_dish = comp_dish_[static_cast<std::size_t>(g)];
  const int old_count = static_cast<int>(component_items(g).size());

  std::vector<DishId> retire_candidates;
  for (int c = 0; c < old_count; ++c) {
    retire_candidates.push_back(old_dish[static_cast<std::size_t>(c)]);
    remove_component_counts(g, c);
  }

  comp_of_[static_cast<std::size_t>(g)] =
      components_from_links(links_[static_cast<std::size_t>(g)]);
  const auto items = component_items(g);
  comp_dish_[static_cast<std::size_t>(g)].assign(items.size(), DishId{});
  for (std::size_t c = 0; c < items.size(); ++c) {
    DishId dish;
    bool anchored = false;
    if (anchor_item >= 0) {
      for (int i : items[c]) {
        if (i == anchor_item) {
          dish = anchor_dish;
          anchored = true;
          break;
        }
      }
    }
    if (!anchored) {
      // Every other new component lies inside exactly one old component.
      dish = old_dish[static_cast<std::size_t>(
          old_comp[static_cast<std::size_t>(items[c].front())])];
    }
    add_component_counts(g, static_cast<int>(c), dish);
  }
  for (DishId id : retire_candidates) maybe_retire(id);
}

std::vector<double> DdcrpModel::link_log_posterior(int g, int i) const {
  const SpatialGroup& grp = data_->groups[static_cast<std::size_t>(g)];
  const int n = grp.size();
  const auto& comp = comp_of_[static_cast<std::size_t>(g)];
  const auto items = component_items(g);
  const int my_comp = comp[static_cast<std::size_t>(i)];
  const double log_mine = log_component_marginal(items[static_cast<std::size_t>(my_comp)], g);

  std::vector<double> logw(static_cast<std::size_t>(n), kNegInf);
  std::vector<double> merge_cache(items.size(),
                                  std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < n; ++j) {
    double prior;
    if (j == i) {
      prior = hypers_.alpha;
    } else {
      prior = decay(
          grp.hops[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
          hypers_.window);
    }
    if (prior <= 0.0) continue;
    double ratio = 0.0;
    const int other = comp[static_cast<std::size_t>(j)];
    if (other != my_comp) {
      if (std::isnan(merge_cache[static_cast<std::size_t>(other)])) {
        std::vector<int> merged = items[static_cast<std::size_t>(my_comp)];
        merged.insert(merged.end(), items[static_cast<std::size_t>(other)].begin(),
                      items[static_cast<std::size_t>(other)].end());
        merge_cache[static_cast<std::size_t>(other)] =
            log_component_marginal(merged, g) - log_mine -
            log_component_marginal(items[static_cast<std::size_t>(other)], g);
      }
      ratio = merge_cache[static_cast<std::size_t>(other)];
    }
    logw[static_cast<std::size_t>(j)] = std::log(prior) + ratio;
  }
  return logw;
}

void DdcrpModel::resample_link(int g, int i, Rng& rng) {
  auto& links = links_[static_cast<std::size_t>(g)];
  // Detach: self-link and split the component along the removed edge.
  links[static_cast<std::size_t>(i)] = i;
  rebuild_group(g, -1, DishId{});

  const std::vector<double> logw = link_log_posterior(g, i);
  const int choice = rng.categorical_from_logs(logw);

  links[static_cast<std::size_t>(i)] = choice;
  const int target_comp = comp_of_[static_cast<std::size_t>(g)]
                                  [static_cast<std::size_t>(choice)];
  const DishId target_dish = comp_dish_[static_cast<std::size_t>(g)]
                                       [static_cast<std::size_t>(target_comp)];
  rebuild_group(g, choice, target_dish);
}

void DdcrpModel::set_link(int g, int i, int target) {
  const int n = data_->groups[static_cast<std::size_t>(g)].size();
  if (i < 0 || i >= n || target < 0 || target >= n) {
    throw DataError("set_link: item out of range");
  }
  auto& links = links_[static_cast<std::size_t>(g)];
  links[static_cast<std::size_t>(i)] = i;
  rebuild_group(g, -1, DishId{});
  links[static_cast<std::size_t>(i)] = target;
  const int target_comp = comp_of_[static_cast<std::size_t>(g)]
                                  [static_cast<std::size_t>(target)];
  const DishId target_dish = comp_dish_[static_cast<std::size_t>(g)]
                                       [static_cast<std::size_t>(target_comp)];
  rebuild_group(g, target, target_dish);
}

// Dish conditional for a component whose counts are not currently included.
BlockDishDistribution DdcrpModel::dish_distribution_unseated(
    int g, const std::vector<int>& item_ids) const {
  BlockDishDistribution dist;
  const LabelMask& mask = masks_[static_cast<std::size_t>(g)];
  const double eta = hypers_.eta;
  const int m_g = group_comp_total_[static_cast<std::size_t>(g)];
  for (int k = 0; k < num_labels(); ++k) {
    if (!mask.allowed(k)) continue;
    const double gamma_k = hypers_.gamma[static_cast<std::size_t>(k)];
    const double log_mix = std::log(
        (group_label_comps_[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)] +
         eta) /
        (m_g + mask.ones * eta));
    const double urn_denom = label_components_[static_cast<std::size_t>(k)] + gamma_k;
    for (int l : live_dish_ids(k)) {
      const DdcrpDish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      dist.dishes.push_back(DishId{k, l});
      dist.log_weights.push_back(
          d.components == 0
              ? kNegInf
              : log_mix + std::log(d.components / urn_denom) +
                    log_dish_likelihood(item_ids, g, k, l));
    }
    dist.dishes.push_back(DishId{k, -1});
    dist.log_weights.push_back(log_mix + std::log(gamma_k / urn_denom) +
                               log_dish_likelihood(item_ids, g, k, -1));
  }
  return dist;
}

BlockDishDistribution DdcrpModel::component_dish_distribution(int g, int component) {
  const DishId original = comp_dish_[static_cast<std::size_t>(g)]
                                    [static_cast<std::size_t>(component)];
  const auto items = component_items(g);
  remove_component_counts(g, component);
  BlockDishDistribution dist =
      dish_distribution_unseated(g, items[static_cast<std::size_t>(component)]);
  add_component_counts(g, component, original);
  return dist;
}

void DdcrpModel::resample_component_dish(int g, int component, Rng& rng) {
  const DishId original = comp_dish_[static_cast<std::size_t>(g)]
                                    [static_cast<std::size_t>(component)];
  const auto items = component_items(g);
  remove_component_counts(g, component);
  const BlockDishDistribution dist =
      dish_distribution_unseated(g, items[static_cast<std::size_t>(component)]);
  const int pick = rng.categorical_from_logs(dist.log_weights);
  add_component_counts(g, component, dist.dishes[static_cast<std::size_t>(pick)]);
  maybe_retire(original);
}

void DdcrpModel::init(Rng& rng) {
  for (std::size_t g = 0; g < data_->groups.size(); ++g) {
    const auto items = component_items(static_cast<int>(g));
    for (std::size_t c = 0; c < items.size(); ++c) {
      // Sequential draw from the dish conditional over already-seated mass.
      const BlockDishDistribution dist =
          dish_distribution_unseated(static_cast<int>(g), items[c]);
      const int pick = rng.categorical_from_logs(dist.log_weights);
      add_component_counts(static_cast<int>(g), static_cast<int>(c),
                           dist.dishes[static_cast<std::size_t>(pick)]);
    }
  }
}

void DdcrpModel::resample_hypers(Rng& rng) {
  // gamma_k: Escobar-West with components as the label-level customers.
  for (int k = 0; k < num_labels(); ++k) {
    const GammaPrior& prior = hypers_.gamma_prior;
    const long long m = label_components_[static_cast<std::size_t>(k)];
    if (m < 1) {
      hypers_.gamma[static_cast<std::size_t>(k)] = rng.gamma(prior.shape, prior.rate);
      continue;
    }
    const double gamma_k = hypers_.gamma[static_cast<std::size_t>(k)];
    const double x = rng.beta(gamma_k + 1.0, static_cast<double>(m));
    const double rate = prior.rate - std::log(x);
    const double a = prior.shape + live_dish_count(k);
    const double odds = (a - 1.0) / (m * rate);
    const double shape = (rng.uniform() < odds / (1.0 + odds)) ? a : a - 1.0;
    hypers_.gamma[static_cast<std::size_t>(k)] = rng.gamma(shape, rate);
  }

  // alpha: random-walk MH on log alpha against the exact link prior.
  auto log_post = [this](double alpha) {
    double lp = (hypers_.alpha_prior.shape - 1.0) * std::log(alpha) -
                hypers_.alpha_prior.rate * alpha;
    for (std::size_t g = 0; g < links_.size(); ++g) {
      for (std::size_t i = 0; i < links_[g].size(); ++i) {
        if (links_[g][i] == static_cast<int>(i)) lp += std::log(alpha);
        lp -= std::log(prior_sums_[g][i] + alpha);
      }
    }
    return lp;
  };
  const double current = hypers_.alpha;
  const double proposal = current * std::exp(0.6 * rng.normal());
  const double accept = log_post(proposal) - log_post(current) +
                        std::log(proposal) - std::log(current);
  if (std::log(rng.uniform() + 1e-300) < accept) hypers_.alpha = proposal;
}

void DdcrpModel::gibbs_sweep(Rng& rng, bool sample_hypers) {
  for (std::size_t g = 0; g < data_->groups.size(); ++g) {
    const int n = data_->groups[g].size();
    for (int i = 0; i < n; ++i) resample_link(static_cast<int>(g), i, rng);
    const int comps = static_cast<int>(component_items(static_cast<int>(g)).size());
    for (int c = 0; c < comps; ++c) {
      resample_component_dish(static_cast<int>(g), c, rng);
    }
  }
  if (sample_hypers) resample_hypers(rng);
}

std::vector<std::string> DdcrpModel::audit() const {
  std::vector<std::string> report;
  const int K = num_labels();
  std::vector<std::vector<long long>> comp_count(dishes_.size());
  std::vector<std::vector<std::map<int, long long>>> tex(dishes_.size()), col(dishes_.size());
  for (int k = 0; k < K; ++k) {
    comp_count[static_cast<std::size_t>(k)].assign(
        static_cast<std::size_t>(dish_slots(k)), 0);
    tex[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(dish_slots(k)));
    col[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(dish_slots(k)));
  }
  std::vector<long long> label_comps(static_cast<std::size_t>(K), 0);

  for (std::size_t g = 0; g < data_->groups.size(); ++g) {
    const auto expect = components_from_links(links_[g]);
    if (expect != comp_of_[g]) {
      std::ostringstream os;
      os << "group " << g << ": partition does not match components_from_links";
      report.push_back(os.str());
      continue;
    }
    const auto items = component_items(static_cast<int>(g));
    std::vector<int> per_label(static_cast<std::size_t>(K), 0);
    for (std::size_t c = 0; c < items.size(); ++c) {
      const DishId id = comp_dish_[g][c];
      if (id.index < 0 || id.label < 0 || id.label >= K ||
          id.index >= dish_slots(id.label)) {
        std::ostringstream os;
        os << "group " << g << " component " << c << ": invalid dish id";
        report.push_back(os.str());
        continue;
      }
      if (!masks_[g].allowed(id.label)) {
        std::ostringstream os;
        os << "group " << g << " component " << c << ": masked label "
           << id.label;
        report.push_back(os.str());
      }
      ++per_label[static_cast<std::size_t>(id.label)];
      ++label_comps[static_cast<std::size_t>(id.label)];
      ++comp_count[static_cast<std::size_t>(id.label)][static_cast<std::size_t>(id.index)];
      for (int i : items[c]) {
        const SpatialItem& it = data_->groups[g].items[static_cast<std::size_t>(i)];
        ++tex[static_cast<std::size_t>(id.label)][static_cast<std::size_t>(id.index)]
             [it.texture];
        ++col[static_cast<std::size_t>(id.label)][static_cast<std::size_t>(id.index)]
             [it.color];
      }
    }
    for (int k = 0; k < K; ++k) {
      if (per_label[static_cast<std::size_t>(k)] !=
          group_label_comps_[g][static_cast<std::size_t>(k)]) {
        std::ostringstream os;
        os << "group " << g << ": m_gk mismatch for label " << k;
        report.push_back(os.str());
      }
    }
    if (static_cast<int>(items.size()) != group_comp_total_[g]) {
      std::ostringstream os;
      os << "group " << g << ": component total mismatch";
      report.push_back(os.str());
    }
  }

  for (int k = 0; k < K; ++k) {
    if (label_comps[static_cast<std::size_t>(k)] !=
        label_components_[static_cast<std::size_t>(k)]) {
      std::ostringstream os;
      os << "label " << k << ": m_.k. mismatch";
      report.push_back(os.str());
    }
    int live = 0;
    for (int l = 0; l < dish_slots(k); ++l) {
      const DdcrpDish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      if (!d.retired) ++live;
      if (d.components !=
          comp_count[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) {
        std::ostringstream os;
        os << "dish (" << k << "," << l << "): component count mismatch";
        report.push_back(os.str());
      }
      long long tex_total = 0, col_total = 0;
      for (auto [w, c] : tex[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) {
        tex_total += c;
        const long long actual = w < static_cast<int>(d.texture_count.size())
                                     ? d.texture_count[static_cast<std::size_t>(w)]
                                     : 0;
        if (actual != c) {
          std::ostringstream os;
          os << "dish (" << k << "," << l << "): texture count mismatch at " << w;
          report.push_back(os.str());
        }
      }
      for (auto [w, c] : col[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) {
        col_total += c;
        const long long actual = w < static_cast<int>(d.color_count.size())
                                     ? d.color_count[static_cast<std::size_t>(w)]
                                     : 0;
        if (actual != c) {
          std::ostringstream os;
          os << "dish (" << k << "," << l << "): color count mismatch at " << w;
          report.push_back(os.str());
        }
      }
      if (tex_total != d.texture_total || col_total != d.color_total) {
        std::ostringstream os;
        os << "dish (" << k << "," << l << "): channel totals mismatch";
        report.push_back(os.str());
      }
    }
    if (live != live_dish_count(k)) {
      std::ostringstream os;
      os << "label " << k << ": live dish count mismatch";
      report.push_back(os.str());
    }
  }
  return report;
}

SegmentResult segment(const GroupCollection& data, const DdcrpHypers& hypers,
                      const ChainConfig& config) {
  config.validate();
  DdcrpModel model(data, hypers);
  Rng rng(config.seed);
  model.init(rng);

  SegmentResult result;
  for (int it = 1; it <= config.iterations; ++it) {
    model.gibbs_sweep(rng, config.sample_hypers);
    if (it > config.burn_in && (it - config.burn_in - 1) % config.sample_gap == 0) {
      SegmentSample sample;
      for (std::size_t g = 0; g < data.groups.size(); ++g) {
        sample.assignment.push_back(model.components(static_cast<int>(g)));
        const auto& dishes = model.component_dishes(static_cast<int>(g));
        std::vector<int> labels(dishes.size());
        for (std::size_t c = 0; c < dishes.size(); ++c) labels[c] = dishes[c].label;
        sample.component_label.push_back(std::move(labels));
      }
      result.samples.push_back(std::move(sample));
    }
  }

  for (std::size_t g = 0; g < data.groups.size(); ++g) {
    GroupSegmentation out;
    out.group_id = data.groups[g].id;
    out.assignment = model.components(static_cast<int>(g));
    const auto& dishes = model.component_dishes(static_cast<int>(g));
    for (const DishId& id : dishes) {
      out.component_labels.push_back(data.labels.id_to_label[static_cast<std::size_t>(id.label)]);
    }
    result.final_sample.push_back(std::move(out));
  }
  return result;
}

void save_segmentation(const SegmentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write segmentation file: " + path);
  for (const auto& g : result.final_sample) {
    json j;
    j["id"] = g.group_id;
    j["assignment"] = g.assignment;
    j["component_labels"] = g.component_labels;
    out << j.dump() << "\n";
  }
}

}  // namespace dpmrm
