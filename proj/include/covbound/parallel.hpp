///
/// \file parallel.hpp
///
#ifndef COVBOUND_PARALLEL_HPP
#define COVBOUND_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace covbound
{

inline std::size_t resolve_jobs(std::size_t jobs)
{
    if (jobs == 0)
    {
        jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    return jobs;
}

///
/// Calls body(i) for i in [0, count) on up to `jobs` threads (0 = hardware
/// concurrency). Each index runs exactly once; the first exception thrown by
/// any body is rethrown after all workers stop.
///
template <typename Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body)
{
    jobs = std::min(resolve_jobs(jobs), count);
    if (jobs <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++)
        {
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                {
                    error = std::current_exception();
                }
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t)
    {
        pool.emplace_back(worker);
    }
    for (auto& th : pool)
    {
        th.join();
    }
    if (error)
    {
        std::rethrow_exception(error);
    }
}

} // namespace covbound

#endif /* COVBOUND_PARALLEL_HPP */
