pub struct PathSkeleton<T>(pub T); // placeholder
