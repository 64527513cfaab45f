#include "tabprobe/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

nlohmann::json EvalResult::to_json() const {
    nlohmann::json j;
    j["accuracy"] = accuracy;
    j["standard_error"] = standard_error;
    j["n"] = evaluated;
    j["parse_failures"] = parse_failures;
    j["config"] = config;
    nlohmann::json items_json = nlohmann::json::array();
    for (const auto& item : items)
        items_json.push_back({{"row", item.row},
                              {"expected", item.expected},
                              {"predicted", item.predicted},
                              {"parse_failure", item.parse_failure},
                              {"correct", item.correct},
                              {"transcript_digest", item.transcript_digest}});
    j["items"] = std::move(items_json);
    return j;
}

std::vector<size_t> stratified_select(const TabularDataset& dataset, int k, uint64_t seed) {
    auto target = dataset.target_index();
    if (!target) throw ConfigInvalid("stratified_select needs a target feature");
    if (k > static_cast<int>(dataset.n_rows()))
        throw ConfigInvalid("cannot select more examples than rows");

    // class -> member rows, first-appearance order
    std::vector<std::string> class_names;
    std::map<std::string, std::vector<size_t>> members;
    for (size_t r = 0; r < dataset.n_rows(); ++r) {
        const std::string& label = dataset.rows[r][*target].raw;
        if (!members.count(label)) class_names.push_back(label);
        members[label].push_back(r);
    }

    // largest-remainder apportionment of k by class frequency
    const double n = static_cast<double>(dataset.n_rows());
    struct Share {
        std::string name;
        int quota;
        double remainder;
    };
    std::vector<Share> shares;
    int assigned = 0;
    for (const auto& name : class_names) {
        double exact = k * static_cast<double>(members[name].size()) / n;
        int quota = static_cast<int>(std::floor(exact));
        shares.push_back({name, quota, exact - quota});
        assigned += quota;
    }
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (int i = 0; i < k - assigned; ++i) shares[static_cast<size_t>(i) % shares.size()].quota += 1;

    auto rng = make_rng(seed, "stratified");
    std::vector<size_t> selected;
    for (const auto& name : class_names) {
        auto it = std::find_if(shares.begin(), shares.end(),
                               [&](const Share& s) { return s.name == name; });
        auto pool = members[name];
        if (static_cast<size_t>(it->quota) > pool.size())
            throw ClassStarvation("class '" + name + "' has fewer rows than its quota");
        std::shuffle(pool.begin(), pool.end(), rng);
        selected.insert(selected.end(), pool.begin(), pool.begin() + it->quota);
    }
    // fixed seeded shuffle so example order is identical across models
    std::shuffle(selected.begin(), selected.end(), rng);
    return selected;
}

static std::string default_system_prompt(const TabularDataset& dataset,
                                         const FewShotConfig& config,
                                         const std::vector<std::string>& label_set) {
    std::string labels;
    for (size_t i = 0; i < label_set.size(); ++i) {
        if (i) labels += ", ";
        labels += "'" + label_set[i] + "'";
    }
    const std::string target = dataset.target_feature.value_or("the target");
    switch (config.level) {
        case TransformLevel::Original:
        case TransformLevel::Perturbed:
            // dataset-identifying system prompt
            return "You are a helpful statistician and data scientist. You help to make "
                   "predictions on the " +
                   dataset.name +
                   " dataset. The user provides you with data on different observations. Your "
                   "task is to predict the value of '" +
                   target + "'. Respond with one of: " + labels +
                   ". Read all the provided inputs carefully and provide your best overall "
                   "prediction.";
        case TransformLevel::Task:
            return "You are a helpful statistician and data scientist. You help to make "
                   "predictions on a tabular dataset. The user provides you with data on "
                   "different observations. Your task is to predict the value of '" +
                   target + "'. Respond with one of: " + labels +
                   ". Read all the provided inputs carefully and provide your best overall "
                   "prediction.";
        case TransformLevel::Statistical:
            return "You are an expert statistician. The user provides observations of numerical "
                   "features and the value of a target variable 'Y'. Your task is to predict the "
                   "value of 'Y' for a new observation. Respond with one of: " +
                   labels + " and nothing else.";
    }
    return "";
}

ChatTranscript build_classification_prompt(const TabularDataset& dataset,
                                           const std::vector<size_t>& examples, size_t query,
                                           const FewShotConfig& config) {
    if (!dataset.target_feature) throw ConfigInvalid("classification prompt needs a target");
    if (std::find(examples.begin(), examples.end(), query) != examples.end())
        throw ConfigInvalid("query row must not be a few-shot example");

    std::vector<std::string> label_set = config.label_set;
    if (label_set.empty()) {
        auto target = *dataset.target_index();
        std::set<std::string> seen;
        for (const auto& row : dataset.rows)
            if (seen.insert(row[target].raw).second) label_set.push_back(row[target].raw);
    }

    ChatTranscript transcript;
    transcript.push_back({ChatMessage::System, config.system_prompt
                                                   ? *config.system_prompt
                                                   : default_system_prompt(dataset, config, label_set)});
    auto target = *dataset.target_index();
    for (size_t example : examples) {
        transcript.push_back(
            {ChatMessage::User, render_row_kv(dataset, example, dataset.target_feature)});
        transcript.push_back({ChatMessage::Assistant, dataset.rows[example][target].raw});
    }
    transcript.push_back({ChatMessage::User, render_row_kv(dataset, query, dataset.target_feature)});
    return transcript;
}

std::optional<std::string> parse_label(const std::string& response,
                                       const std::vector<std::string>& label_set) {
    if (label_set.empty()) throw ConfigInvalid("empty label set");
    std::string trimmed = to_lower(trim(response));
    for (const auto& label : label_set)
        if (to_lower(label) == trimmed) return label;
    // unique substring match
    std::optional<std::string> found;
    for (const auto& label : label_set) {
        if (trimmed.find(to_lower(label)) != std::string::npos) {
            if (found) return std::nullopt;  // ambiguous
            found = label;
        }
    }
    return found;
}

EvalResult run_classification(const TabularDataset& dataset, const ChatModel& model,
                              const FewShotConfig& config) {
    auto examples = stratified_select(dataset, config.n_examples, config.seed);
    std::set<size_t> example_set(examples.begin(), examples.end());

    std::vector<size_t> pool;
    for (size_t r = 0; r < dataset.n_rows(); ++r)
        if (!example_set.count(r)) pool.push_back(r);
    auto rng = make_rng(config.seed, "eval");
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > static_cast<size_t>(config.test_set_size))
        pool.resize(static_cast<size_t>(config.test_set_size));
    std::sort(pool.begin(), pool.end());

    std::vector<std::string> label_set = config.label_set;
    if (label_set.empty()) {
        auto target = *dataset.target_index();
        std::set<std::string> seen;
        for (const auto& row : dataset.rows)
            if (seen.insert(row[target].raw).second) label_set.push_back(row[target].raw);
    }
    FewShotConfig effective = config;
    effective.label_set = label_set;

    auto target = *dataset.target_index();
    std::vector<ItemRecord> items(pool.size());
    std::vector<char> errored(pool.size(), 0);
    parallel_for(pool.size(), config.workers, [&](size_t i) {
        size_t row = pool[i];
        ItemRecord& item = items[i];
        item.row = static_cast<int>(row);
        item.expected = dataset.rows[row][target].raw;
        try {
            auto transcript = build_classification_prompt(dataset, examples, row, effective);
            item.transcript_digest = transcript_digest(transcript);
            std::string response = chat(model, transcript, config.completion);
            auto parsed = parse_label(response, label_set);
            if (parsed) {
                item.predicted = *parsed;
                item.correct = item.predicted == item.expected;
            } else {
                item.predicted = trim(first_line(response));
                item.parse_failure = true;  // scored incorrect
            }
        } catch (const Error&) {
            errored[i] = 1;
        }
    });

    EvalResult result;
    int error_count = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (errored[i]) {
            ++error_count;
            continue;
        }
        ++result.evaluated;
        if (items[i].parse_failure) ++result.parse_failures;
        if (items[i].correct) result.accuracy += 1.0;
        result.items.push_back(items[i]);
    }
    if (!pool.empty() && error_count > static_cast<int>(0.2 * pool.size()))
        throw ParseAbort("more than 20% of model calls failed");
    if (result.evaluated > 0) {
        result.accuracy /= result.evaluated;
        result.standard_error =
            std::sqrt(result.accuracy * (1.0 - result.accuracy) / result.evaluated);
    }
    result.config = {{"n_examples", config.n_examples},
                     {"level", to_string(config.level)},
                     {"test_set_size", config.test_set_size},
                     {"seed", config.seed},
                     {"temperature", config.completion.temperature},
                     {"model", model.id()},
                     {"labels", label_set},
                     {"errors", error_count}};
    return result;
}

// --- baselines ---------------------------------------------------------------

double LinearModel::decision(const std::vector<double>& x) const {
    double z = intercept;
    for (size_t i = 0; i < weights.size(); ++i) {
        double v = (x[i] - feature_means[i]) / feature_stddevs[i];
        z += weights[i] * v;
    }
    return 1.0 / (1.0 + std::exp(-z));
}

int LinearModel::predict(const std::vector<double>& x) const { return decision(x) >= 0.5 ? 1 : 0; }

namespace {

struct Standardizer {
    std::vector<double> means, stddevs;
    void fit(const std::vector<std::vector<double>>& rows) {
        const size_t d = rows[0].size();
        means.assign(d, 0.0);
        stddevs.assign(d, 0.0);
        for (const auto& row : rows)
            for (size_t j = 0; j < d; ++j) means[j] += row[j];
        for (double& m : means) m /= static_cast<double>(rows.size());
        for (const auto& row : rows)
            for (size_t j = 0; j < d; ++j) stddevs[j] += (row[j] - means[j]) * (row[j] - means[j]);
        for (double& s : stddevs) {
            s = std::sqrt(s / static_cast<double>(rows.size()));
            if (s == 0.0) s = 1.0;
        }
    }
    std::vector<double> apply(const std::vector<double>& row) const {
        std::vector<double> out(row.size());
        for (size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - means[j]) / stddevs[j];
        return out;
    }
};

// Full-batch gradient descent on L2-regularized mean log-loss. The step size
// backtracks whenever the loss fails to decrease.
void fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                  double penalty, std::vector<double>& weights, double& intercept) {
    const size_t n = x.size(), d = x[0].size();
    weights.assign(d, 0.0);
    intercept = 0.0;
    auto loss = [&](const std::vector<double>& w, double b) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = b;
            for (size_t j = 0; j < d; ++j) z += w[j] * x[i][j];
            // log(1 + exp(-|z|)) formulation for stability
            double margin = (y[i] ? z : -z);
            total += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
        }
        double reg = 0.0;
        for (double wj : w) reg += wj * wj;
        return total / n + 0.5 * penalty * reg / n;
    };
    double lr = 1.0;
    double current = loss(weights, intercept);
    std::vector<double> grad(d);
    for (int iter = 0; iter < 500; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = intercept;
            for (size_t j = 0; j < d; ++j) z += weights[j] * x[i][j];
            double p = 1.0 / (1.0 + std::exp(-z));
            double err = p - y[i];
            for (size_t j = 0; j < d; ++j) grad[j] += err * x[i][j];
            grad_b += err;
        }
        for (size_t j = 0; j < d; ++j) grad[j] = grad[j] / n + penalty * weights[j] / n;
        grad_b /= n;
        // backtracking line search
        for (int attempt = 0; attempt < 40; ++attempt) {
            std::vector<double> w_next(d);
            for (size_t j = 0; j < d; ++j) w_next[j] = weights[j] - lr * grad[j];
            double b_next = intercept - lr * grad_b;
            double next = loss(w_next, b_next);
            if (next <= current) {
                weights = std::move(w_next);
                intercept = b_next;
                current = next;
                lr *= 1.1;
                break;
            }
            lr *= 0.5;
        }
        double grad_norm = std::fabs(grad_b);
        for (double g : grad) grad_norm = std::max(grad_norm, std::fabs(g));
        if (grad_norm < 1e-7) break;
    }
}

}  // namespace

LinearModel train_logistic_regression(const std::vector<std::vector<double>>& rows,
                                      const std::vector<int>& labels, int folds,
                                      const std::vector<double>& penalty_grid) {
    if (rows.empty() || rows.size() != labels.size())
        throw ConfigInvalid("train_logistic_regression: bad input shapes");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw SingleClass("training labels contain a single class");
    if (classes.size() > 2 || *classes.begin() < 0 || *classes.rbegin() > 1)
        throw ConfigInvalid("logistic regression expects binary 0/1 labels");

    std::vector<double> grid = penalty_grid;
    if (grid.empty()) grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};

    Standardizer standardizer;
    standardizer.fit(rows);
    std::vector<std::vector<double>> x;
    x.reserve(rows.size());
    for (const auto& row : rows) x.push_back(standardizer.apply(row));

    // deterministic fold assignment
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), size_t{0});
    auto rng = make_rng(0xF01Du, "lr-folds");
    std::shuffle(order.begin(), order.end(), rng);

    double best_penalty = grid.front();
    double best_accuracy = -1.0;
    int usable_folds = std::min<int>(folds, static_cast<int>(rows.size()));
    for (double penalty : grid) {
        int correct = 0, total = 0;
        for (int fold = 0; fold < usable_folds; ++fold) {
            std::vector<std::vector<double>> train_x;
            std::vector<int> train_y;
            std::vector<size_t> valid;
            for (size_t i = 0; i < order.size(); ++i) {
                if (static_cast<int>(i % usable_folds) == fold)
                    valid.push_back(order[i]);
                else {
                    train_x.push_back(x[order[i]]);
                    train_y.push_back(labels[order[i]]);
                }
            }
            std::set<int> fold_classes(train_y.begin(), train_y.end());
            if (fold_classes.size() < 2) continue;
            std::vector<double> w;
            double b;
            fit_logistic(train_x, train_y, penalty, w, b);
            for (size_t i : valid) {
                double z = b;
                for (size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
                int pred = z >= 0.0 ? 1 : 0;
                correct += pred == labels[i];
                ++total;
            }
        }
        double accuracy = total ? static_cast<double>(correct) / total : 0.0;
        if (accuracy > best_accuracy) {
            best_accuracy = accuracy;
            best_penalty = penalty;
        }
    }

    LinearModel model;
    model.l2_penalty = best_penalty;
    model.cv_accuracy = best_accuracy;
    model.feature_means = standardizer.means;
    model.feature_stddevs = standardizer.stddevs;
    fit_logistic(x, labels, best_penalty, model.weights, model.intercept);
    return model;
}

int knn_predict(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                const std::vector<double>& query, int k) {
    if (rows.empty() || rows.size() != labels.size())
        throw ConfigInvalid("knn_predict: bad input shapes");
    Standardizer standardizer;
    standardizer.fit(rows);
    std::vector<double> q = standardizer.apply(query);
    std::vector<std::pair<double, size_t>> distances;
    distances.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        auto z = standardizer.apply(rows[i]);
        double d2 = 0.0;
        for (size_t j = 0; j < q.size(); ++j) d2 += (z[j] - q[j]) * (z[j] - q[j]);
        distances.emplace_back(d2, i);
    }
    std::stable_sort(distances.begin(), distances.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (k <= 1) return labels[distances.front().second];
    std::map<int, int> votes;
    int limit = std::min<int>(k, static_cast<int>(distances.size()));
    for (int i = 0; i < limit; ++i) ++votes[labels[distances[static_cast<size_t>(i)].second]];
    int best_label = labels[distances.front().second];
    int best_votes = 0;
    for (int i = 0; i < limit; ++i) {
        int label = labels[distances[static_cast<size_t>(i)].second];
        if (votes[label] > best_votes) {  // nearest-first iteration breaks ties by proximity
            best_votes = votes[label];
            best_label = label;
        }
    }
    return best_label;
}

EncodedDataset encode_for_baselines(const TabularDataset& dataset) {
    auto target = dataset.target_index();
    if (!target) throw ConfigInvalid("encode_for_baselines needs a target feature");
    EncodedDataset out;

    // column layout: numeric pass-through, one-hot categorical, identifiers skipped
    struct Column {
        size_t index;
        bool numeric;
        std::vector<std::string> categories;
        double mean = 0.0;  // for missing-value imputation
    };
    std::vector<Column> layout;
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        if (c == *target) continue;
        const ColumnKind& kind = dataset.columns[c];
        if (kind.kind == ColumnKind::Identifier) continue;
        Column col{c, kind.kind == ColumnKind::Numeric, {}};
        if (col.numeric) {
            double sum = 0.0, count = 0.0;
            for (const auto& row : dataset.rows)
                if (row[c].numeric) {
                    sum += *row[c].numeric;
                    count += 1.0;
                }
            col.mean = count ? sum / count : 0.0;
        } else {
            std::set<std::string> seen;
            for (const auto& row : dataset.rows)
                if (seen.insert(row[c].raw).second) col.categories.push_back(row[c].raw);
        }
        layout.push_back(std::move(col));
    }

    std::map<std::string, int> label_codes;
    for (const auto& row : dataset.rows) {
        std::vector<double> encoded;
        for (const auto& col : layout) {
            const CellValue& cell = row[col.index];
            if (col.numeric) {
                encoded.push_back(cell.numeric ? *cell.numeric : col.mean);
            } else {
                for (const auto& category : col.categories)
                    encoded.push_back(cell.raw == category ? 1.0 : 0.0);
            }
        }
        out.rows.push_back(std::move(encoded));
        const std::string& label = row[*target].raw;
        auto it = label_codes.find(label);
        if (it == label_codes.end()) {
            it = label_codes.emplace(label, static_cast<int>(out.label_names.size())).first;
            out.label_names.push_back(label);
        }
        out.labels.push_back(it->second);
    }
    return out;
}

}  // namespace tabprobe
