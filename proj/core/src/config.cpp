#include "fbguide/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fbguide/errors.hpp"

namespace fbguide {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a real number, got '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return static_cast<uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + value + "'");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: key '" + key + "' expects a comma list of reals");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void check_mode_name(const std::string& key, const std::string& value) {
    if (value != "none" && value != "standard" && value != "rollout" && value != "feedback" &&
        value != "feedback_aa" && value != "base") {
        throw ConfigError("config: key '" + key + "' has invalid value '" + value +
                          "'; valid modes: none, standard, feedback, feedback_aa (methods also: base, rollout)");
    }
}

void apply(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    // env
    if (key == "env.n_state") cfg.env.n_state = parse_int(key, value);
    else if (key == "env.m_action") cfg.env.m_action = parse_int(key, value);
    else if (key == "env.horizon") cfg.env.horizon = parse_int(key, value);
    else if (key == "env.exec_prefix") cfg.env.exec_prefix = parse_int(key, value);
    else if (key == "env.dt_dec") cfg.env.dt_dec = parse_double(key, value);
    else if (key == "env.t_max") cfg.env.t_max = parse_int(key, value);
    else if (key == "env.grasp_radius") cfg.env.grasp_radius = parse_double(key, value);
    else if (key == "env.goal_radius") cfg.env.goal_radius = parse_double(key, value);
    else if (key == "env.a_max") cfg.env.a_max = parse_double(key, value);
    else if (key == "env.sigma_proc") cfg.env.sigma_proc = parse_double(key, value);
    else if (key == "env.drag") cfg.env.drag = parse_double(key, value);
    else if (key == "env.drag_lin") cfg.env.drag_lin = parse_double(key, value);
    else if (key == "env.demo_noise_std") cfg.env.demo_noise_std = parse_double(key, value);
    else if (key == "env.nuis_amp") cfg.env.nuis_amp = parse_double_list(key, value);
    else if (key == "env.nuis_freq") cfg.env.nuis_freq = parse_double_list(key, value);
    else if (key == "env.nuis_phase") cfg.env.nuis_phase = parse_double_list(key, value);
    else if (key == "env.nuis_noise_std") cfg.env.nuis_noise_std = parse_double(key, value);
    else if (key == "env.start_x") cfg.env.start_x = parse_double(key, value);
    else if (key == "env.start_y") cfg.env.start_y = parse_double(key, value);
    else if (key == "env.start_box") cfg.env.start_box = parse_double(key, value);
    else if (key == "env.object_x") cfg.env.object_x = parse_double(key, value);
    else if (key == "env.object_y") cfg.env.object_y = parse_double(key, value);
    else if (key == "env.target_x") cfg.env.target_x = parse_double(key, value);
    else if (key == "env.target_y") cfg.env.target_y = parse_double(key, value);
    else if (key == "env.pos_bound") cfg.env.pos_bound = parse_double(key, value);
    else if (key == "env.vel_bound") cfg.env.vel_bound = parse_double(key, value);
    else if (key == "env.k_p") cfg.env.k_p = parse_double(key, value);
    else if (key == "env.k_d") cfg.env.k_d = parse_double(key, value);
    // wm
    else if (key == "wm.variant") {
        if (value != "ridge" && value != "residual") {
            throw ConfigError("config: key 'wm.variant' has invalid value '" + value +
                              "'; valid: ridge, residual");
        }
        cfg.wm.variant = value;
    } else if (key == "wm.lambda_reg") cfg.wm.lambda_reg = parse_double(key, value);
    else if (key == "wm.delta_decay") {
        if (value != "constant" && value != "exponential" && value != "oscillating") {
            throw ConfigError("config: key 'wm.delta_decay' has invalid value '" + value +
                              "'; valid: constant, exponential, oscillating");
        }
        cfg.wm.delta_decay = value;
    } else if (key == "wm.gamma") cfg.wm.gamma = parse_double(key, value);
    else if (key == "wm.delta_inf") cfg.wm.delta_inf = parse_double(key, value);
    else if (key == "wm.rate") cfg.wm.rate = parse_double(key, value);
    else if (key == "wm.freq") cfg.wm.freq = parse_double(key, value);
    // feedback
    else if (key == "feedback.l") cfg.feedback.l = parse_double(key, value);
    else if (key == "feedback.dt") cfg.feedback.dt = parse_double(key, value);
    // guidance
    else if (key == "guidance.lambda") cfg.guidance.lambda = parse_double(key, value);
    else if (key == "guidance.tau_g") cfg.guidance.tau_g = parse_int(key, value);
    else if (key == "guidance.beta") cfg.guidance.beta = parse_double(key, value);
    else if (key == "guidance.mode") {
        check_mode_name(key, value);
        if (value == "base" || value == "rollout") {
            throw ConfigError("config: key 'guidance.mode' has invalid value '" + value +
                              "'; valid modes: none, standard, feedback, feedback_aa");
        }
        cfg.guidance.mode = value;
    } else if (key == "guidance.methods") {
        cfg.guidance.methods = parse_string_list(value);
        for (const auto& m : cfg.guidance.methods) check_mode_name(key, m);
    }
    // eval
    else if (key == "eval.n_episodes") cfg.eval.n_episodes = parse_int(key, value);
    else if (key == "eval.sigma_ood") cfg.eval.sigma_ood = parse_double_list(key, value);
    else if (key == "eval.sigma_ood_success") cfg.eval.sigma_ood_success = parse_double(key, value);
    else if (key == "eval.seed") cfg.eval.seed = parse_u64(key, value);
    else if (key == "eval.n_demos") cfg.eval.n_demos = parse_int(key, value);
    else if (key == "eval.k_cond") cfg.eval.k_cond = parse_int(key, value);
    else if (key == "eval.bandwidth") cfg.eval.bandwidth = parse_double(key, value);
    else if (key == "eval.m_states") cfg.eval.m_states = parse_int(key, value);
    else if (key == "eval.k_actions") cfg.eval.k_actions = parse_int(key, value);
    else if (key == "eval.burn_in") cfg.eval.burn_in = parse_int(key, value);
    else if (key == "eval.n_rollouts") cfg.eval.n_rollouts = parse_int(key, value);
    else if (key == "eval.diffusion_steps") cfg.eval.diffusion_steps = parse_int(key, value);
    else if (key == "eval.threads") cfg.eval.threads = parse_int(key, value);
    else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected 'section.key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply(cfg, key, value);
    }
    cfg.env.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

namespace {

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

}  // namespace

std::string resolved_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "env.n_state = " << cfg.env.n_state << "\n"
       << "env.m_action = " << cfg.env.m_action << "\n"
       << "env.horizon = " << cfg.env.horizon << "\n"
       << "env.exec_prefix = " << cfg.env.exec_prefix << "\n"
       << "env.dt_dec = " << cfg.env.dt_dec << "\n"
       << "env.t_max = " << cfg.env.t_max << "\n"
       << "env.grasp_radius = " << cfg.env.grasp_radius << "\n"
       << "env.goal_radius = " << cfg.env.goal_radius << "\n"
       << "env.a_max = " << cfg.env.a_max << "\n"
       << "env.sigma_proc = " << cfg.env.sigma_proc << "\n"
       << "env.drag = " << cfg.env.drag << "\n"
       << "env.drag_lin = " << cfg.env.drag_lin << "\n"
       << "env.demo_noise_std = " << cfg.env.demo_noise_std << "\n"
       << "env.nuis_amp = " << join(cfg.env.nuis_amp) << "\n"
       << "env.nuis_freq = " << join(cfg.env.nuis_freq) << "\n"
       << "env.nuis_phase = " << join(cfg.env.nuis_phase) << "\n"
       << "env.nuis_noise_std = " << cfg.env.nuis_noise_std << "\n"
       << "env.start_x = " << cfg.env.start_x << "\n"
       << "env.start_y = " << cfg.env.start_y << "\n"
       << "env.start_box = " << cfg.env.start_box << "\n"
       << "env.object_x = " << cfg.env.object_x << "\n"
       << "env.object_y = " << cfg.env.object_y << "\n"
       << "env.target_x = " << cfg.env.target_x << "\n"
       << "env.target_y = " << cfg.env.target_y << "\n"
       << "env.pos_bound = " << cfg.env.pos_bound << "\n"
       << "env.vel_bound = " << cfg.env.vel_bound << "\n"
       << "env.k_p = " << cfg.env.k_p << "\n"
       << "env.k_d = " << cfg.env.k_d << "\n"
       << "wm.variant = " << cfg.wm.variant << "\n"
       << "wm.lambda_reg = " << cfg.wm.lambda_reg << "\n"
       << "wm.delta_decay = " << cfg.wm.delta_decay << "\n"
       << "wm.gamma = " << cfg.wm.gamma << "\n"
       << "wm.delta_inf = " << cfg.wm.delta_inf << "\n"
       << "wm.rate = " << cfg.wm.rate << "\n"
       << "wm.freq = " << cfg.wm.freq << "\n"
       << "feedback.l = " << cfg.feedback.l << "\n"
       << "feedback.dt = " << cfg.feedback.dt << "\n"
       << "guidance.lambda = " << cfg.guidance.lambda << "\n"
       << "guidance.tau_g = " << cfg.guidance.tau_g << "\n"
       << "guidance.beta = " << cfg.guidance.beta << "\n"
       << "guidance.mode = " << cfg.guidance.mode << "\n"
       << "guidance.methods = " << join(cfg.guidance.methods) << "\n"
       << "eval.n_episodes = " << cfg.eval.n_episodes << "\n"
       << "eval.sigma_ood = " << join(cfg.eval.sigma_ood) << "\n"
       << "eval.sigma_ood_success = " << cfg.eval.sigma_ood_success << "\n"
       << "eval.seed = " << cfg.eval.seed << "\n"
       << "eval.n_demos = " << cfg.eval.n_demos << "\n"
       << "eval.k_cond = " << cfg.eval.k_cond << "\n"
       << "eval.bandwidth = " << cfg.eval.bandwidth << "\n"
       << "eval.m_states = " << cfg.eval.m_states << "\n"
       << "eval.k_actions = " << cfg.eval.k_actions << "\n"
       << "eval.burn_in = " << cfg.eval.burn_in << "\n"
       << "eval.n_rollouts = " << cfg.eval.n_rollouts << "\n"
       << "eval.diffusion_steps = " << cfg.eval.diffusion_steps << "\n"
       << "eval.threads = " << cfg.eval.threads << "\n";
    return os.str();
}

}  // namespace fbguide
