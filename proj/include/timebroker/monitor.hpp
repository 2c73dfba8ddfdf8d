#pragma once

namespace timebroker {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct MonitorReading {
    double distance_m = 0.0;
    bool stop = false;
};

// Distance check between robot and obstacle; stop when closer than the
// threshold. Throws std::invalid_argument on non-finite coordinates.
MonitorReading monitor_step(Point2 robot, Point2 obstacle, double threshold_m);

// Safety monitor with a latched stop: once issued, the stop stays on for
// the rest of the run.
class MonitorFmu {
public:
    explicit MonitorFmu(double safety_threshold_m);

    MonitorReading step(Point2 robot, Point2 obstacle);
    bool stopped() const { return stopped_; }

private:
    double threshold_;
    bool stopped_ = false;
};

} // namespace timebroker
