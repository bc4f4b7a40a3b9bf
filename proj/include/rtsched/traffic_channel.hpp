#pragma once

// Seeded arrival and channel-gain generators. Every user owns independent
// streams keyed by (seed, domain, user index), so adding users of one class
// never perturbs the streams of existing users.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rtsched {

enum class StreamDomain : std::uint64_t {
    RtArrival = 1,
    NrtArrival = 2,
    RtGain = 3,
    NrtGain = 4,
    RtLength = 5,
    NrtLength = 6,
    SharedLength = 7,
    Scheduler = 8,
};

class RandomStream {
public:
    RandomStream() = default;
    RandomStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    std::uint64_t next() { return engine_(); }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
};

struct ChannelModel {
    enum class Kind { OnOff, Rayleigh, Discrete };

    Kind kind = Kind::OnOff;
    double p_on = 1.0;       ///< OnOff: P(gain = 1)
    double mean_gain = 1.0;  ///< Rayleigh: mean power gain
    double gamma_max = 50.0; ///< Rayleigh: truncation point
    std::vector<double> states;  ///< Discrete: gain values
    std::vector<double> probs;   ///< Discrete: state probabilities

    static ChannelModel on_off(double p_on = 1.0);
    static ChannelModel rayleigh(double mean_gain = 1.0, double gamma_max = 50.0);
    static ChannelModel discrete(std::vector<double> states, std::vector<double> probs);

    /// Throws std::invalid_argument on bad parameters.
    void validate() const;
    double max_gain() const;
};

struct PacketLengthModel {
    enum class Kind { Fixed, HomogeneousRandom, HeterogeneousRandom };

    Kind kind = Kind::Fixed;
    double bits = 1.0;      ///< Fixed length
    double min_bits = 0.5;  ///< random models draw uniformly on [min_bits, max_bits]
    double max_bits = 1.5;

    void validate() const;
    /// Mean packet length.
    double mean_bits() const;
};

struct TrafficModel {
    std::vector<double> lambda;  ///< Bernoulli arrival rate per user
    PacketLengthModel packets;

    void validate() const;
};

int draw_arrival(RandomStream& rng, double lambda);
double draw_gain(RandomStream& rng, const ChannelModel& model);

/// One Bernoulli(lambda_i) draw per user, from the user's own stream.
std::vector<int> draw_arrivals(std::span<RandomStream> streams, const TrafficModel& traffic);
/// One gain per user, from the user's own stream.
std::vector<double> draw_gains(std::span<RandomStream> streams, const ChannelModel& model);

/// Per-slot realization of everything random in the system.
struct SlotRealization {
    std::vector<int> rt_arrivals;
    std::vector<int> nrt_arrivals;
    std::vector<double> rt_gains;
    std::vector<double> nrt_gains;
    std::vector<double> rt_bits;
    std::vector<double> nrt_bits;
};

/// The generator instance for one run.
class SlotSource {
public:
    SlotSource(std::uint64_t seed, TrafficModel rt_traffic, TrafficModel nrt_traffic,
               ChannelModel channel);

    void next(SlotRealization& out);

    std::size_t n_rt() const { return rt_traffic_.lambda.size(); }
    std::size_t n_nrt() const { return nrt_traffic_.lambda.size(); }

private:
    double draw_bits(const PacketLengthModel& m, RandomStream& own, double shared) const;

    TrafficModel rt_traffic_;
    TrafficModel nrt_traffic_;
    ChannelModel channel_;
    std::vector<RandomStream> rt_arrival_, nrt_arrival_;
    std::vector<RandomStream> rt_gain_, nrt_gain_;
    std::vector<RandomStream> rt_len_, nrt_len_;
    RandomStream shared_len_;
};

}  // namespace rtsched
